import { describe, expect, it } from 'vitest';

import {
  applyAlert,
  applyFeedPage,
  beginRetrain,
  endRetrain,
  initialState,
  markAlertsRead,
  outOfTolerance,
  pushWhatIf,
  validateWhatIfForm,
} from '../src/state.js';
import { recordDoc } from './server.js';
import type { AlertDoc } from '../src/api.js';

const alert = (id: string): AlertDoc => ({
  alert_id: id,
  kind: 'OutOfTolerance',
  severity: 'Warning',
  record_id: 'R1',
  message: 'deviation over band',
  created_at: '2025-01-06T08:00:00Z',
});

describe('feed state', () => {
  it('accumulates pages without losing earlier rows', () => {
    let state = initialState();
    state = applyFeedPage(state, {
      records: [recordDoc(0), recordDoc(1)],
      next_seq: 1,
      total: 2,
    });
    state = applyFeedPage(state, { records: [recordDoc(2)], next_seq: 2, total: 3 });
    expect(state.feed.map((r) => r.record_id)).toEqual(['TS-0000', 'TS-0001', 'TS-0002']);
    expect(state.nextSeq).toBe(2);
  });

  it('flags out-of-tolerance rows', () => {
    const doc = recordDoc(0, { measured_mm: 50.2, deviation_mm: 0.2 });
    expect(outOfTolerance(doc)).toBe(true);
    expect(outOfTolerance(recordDoc(0))).toBe(false);
  });
});

describe('alert inbox', () => {
  it('increments the unread badge and dedupes by id', () => {
    let state = initialState();
    state = applyAlert(state, alert('A1'));
    state = applyAlert(state, alert('A1'));
    state = applyAlert(state, alert('A2'));
    expect(state.alerts).toHaveLength(2);
    expect(state.unreadAlerts).toBe(2);
    state = markAlertsRead(state);
    expect(state.unreadAlerts).toBe(0);
  });
});

describe('what-if history and retrain latch', () => {
  it('keeps scenario history for comparison', () => {
    let state = initialState();
    const request = { nominal_mm: 100, device: 'CMM', temperature_c: 30 } as const;
    const answer = {
      predicted_deviation_um: 34.4,
      verdict: 'InTolerance',
      margin_mm: 0.0156,
      model_version: 1,
    } as const;
    state = pushWhatIf(state, request, answer, '2025-01-06T08:00:00Z');
    expect(state.whatIfHistory).toHaveLength(1);
    expect(state.whatIfHistory[0].answer.model_version).toBe(1);
  });

  it('allows only one in-flight retrain', () => {
    let state = initialState();
    const started = beginRetrain(state);
    expect(started).not.toBeNull();
    expect(beginRetrain(started!)).toBeNull();
    state = endRetrain(started!);
    expect(beginRetrain(state)).not.toBeNull();
  });
});

describe('connection banner', () => {
  it('shows a stale banner when the stream drops', async () => {
    const { renderConnection } = await import('../src/render.js');
    expect(renderConnection(false)).toContain('stale');
    expect(renderConnection(true)).toContain('live');
  });
});

describe('what-if form validation', () => {
  it('rejects an empty nominal without composing a request', () => {
    const errors = validateWhatIfForm({ nominal: '', device: 'CMM', temperature: '20' });
    expect(errors.nominal).toMatch(/required/);
  });

  it('accepts a complete form', () => {
    const errors = validateWhatIfForm({ nominal: '100', device: 'CMM', temperature: '30' });
    expect(errors).toEqual({});
  });

  it('rejects non-positive nominals and bad devices', () => {
    expect(validateWhatIfForm({ nominal: '-5', device: 'CMM', temperature: '20' }).nominal)
      .toMatch(/positive/);
    expect(validateWhatIfForm({ nominal: '10', device: 'laser', temperature: '20' }).device)
      .toBeDefined();
  });
});
