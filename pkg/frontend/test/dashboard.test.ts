// Acceptance-level checks against the real service: what-if parity
// field-for-field, live feed growth without reload, and the 4-vs-52
// step schedule chart.

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { TwinApi, type AlertDoc } from '../src/api.js';
import { buildStepSeries, countSteps, scheduleComparisonSvg } from '../src/charts.js';
import { renderWhatIfAnswer } from '../src/render.js';
import { applyFeedPage, initialState, type AppState } from '../src/state.js';
import { subscribeSse } from '../src/sse.js';
import { recordDoc, startServer, type RunningServer } from './server.js';

let server: RunningServer;
let api: TwinApi;

beforeAll(async () => {
  server = await startServer();
  api = new TwinApi(server.base);
  for (let i = 0; i < 60; i++) {
    const ack = await api.ingest(recordDoc(i));
    expect(ack.duplicate).toBe(false);
  }
  await api.train(3); // publish an active model for what-if
});

afterAll(() => {
  server?.stop();
});

describe('what-if parity', () => {
  it('renders the service response field-for-field', async () => {
    const answer = await api.whatIf({
      nominal_mm: 100,
      device: 'CMM',
      temperature_c: 30,
      geometry: 'Cylinder',
    });
    const html = renderWhatIfAnswer(answer);
    const field = (name: string) => {
      const match = html.match(new RegExp(`data-${name}="([^"]*)"`));
      expect(match, `missing data-${name}`).not.toBeNull();
      return match![1];
    };
    expect(Number(field('predicted-deviation-um'))).toBe(answer.predicted_deviation_um);
    expect(field('verdict')).toBe(answer.verdict);
    expect(Number(field('margin-mm'))).toBe(answer.margin_mm);
    expect(Number(field('model-version'))).toBe(answer.model_version);
    // and the visible text shows the same prediction and version
    expect(html).toContain(answer.predicted_deviation_um.toFixed(2));
    expect(html).toContain(`model version ${answer.model_version}`);
  });

  it('two identical queries give identical answers', async () => {
    const request = { nominal_mm: 57, device: 'FaroArm', temperature_c: 22.5 } as const;
    const first = await api.whatIf(request);
    const second = await api.whatIf(request);
    expect(second).toEqual(first);
  });
});

describe('live feed', () => {
  it('reflects 5 server-side ingests without a reload', async () => {
    let state: AppState = initialState();

    const poll = async () => {
      const page = await api.measurements({ since_seq: state.nextSeq, limit: 500 });
      state = applyFeedPage(state, page);
    };

    await poll();
    const before = state.feed.length;
    const beforeIds = state.feed.map((r) => r.record_id);

    for (let i = 1000; i < 1005; i++) {
      await api.ingest(recordDoc(i)); // server-side arrival
    }
    await poll(); // same state object chain: no reload, no reset

    expect(state.feed.length).toBe(before + 5);
    expect(state.feed.slice(0, before).map((r) => r.record_id)).toEqual(beforeIds);
    const newIds = state.feed.slice(before).map((r) => r.record_id);
    expect(newIds).toEqual(['TS-1000', 'TS-1001', 'TS-1002', 'TS-1003', 'TS-1004']);
  });
});

describe('alert stream', () => {
  it('delivers an alert over SSE when an out-of-band record arrives', async () => {
    const controller = new AbortController();
    const received: AlertDoc[] = [];
    const done = new Promise<void>((resolve) => {
      void subscribeSse(
        api.alertStreamUrl(),
        {
          onEvent: (event) => {
            if (event.event === 'alert') {
              received.push(JSON.parse(event.data));
              resolve();
            }
          },
        },
        controller.signal,
      );
    });
    await new Promise((r) => setTimeout(r, 300)); // let the stream attach
    const doc = recordDoc(2000, {
      record_id: 'TS-HOT',
      measured_mm: 50.4,
      deviation_mm: 0.4,
      nominal_mm: 50.0,
    });
    await api.ingest(doc);
    await Promise.race([done, new Promise((r) => setTimeout(r, 10_000))]);
    controller.abort();
    expect(received.length).toBeGreaterThan(0);
    expect(received[0].kind).toBe('OutOfTolerance');
    expect(received[0].record_id).toBe('TS-HOT');
  });
});

describe('schedule comparison chart', () => {
  it('shows 4 quarterly steps vs 52 weekly steps', async () => {
    const quarterly = await api.simulateYear('quarterly', 'quick');
    const weekly = await api.simulateYear('weekly', 'quick');
    expect(countSteps(buildStepSeries(quarterly))).toBe(4);
    expect(countSteps(buildStepSeries(weekly))).toBe(52);
    const svg = scheduleComparisonSvg([quarterly, weekly]);
    expect(svg).toContain('data-schedule="Quarterly" data-steps="4"');
    expect(svg).toContain('data-schedule="Weekly" data-steps="52"');
  });
});
