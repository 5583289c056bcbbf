import { describe, expect, it } from 'vitest';

import type { TrajectoryDoc } from '../src/api.js';
import {
  anomalyScatterSvg,
  buildStepSeries,
  countSteps,
  histogramSvg,
  scheduleComparisonSvg,
  temperatureScatterSvg,
} from '../src/charts.js';

function trajectory(interval: TrajectoryDoc['interval'], eventDays: number[]): TrajectoryDoc {
  let gain = 0;
  const events = eventDays.map((day, i) => {
    gain += 0.01;
    return {
      day,
      version: i + 2,
      r2: 0.7 + gain,
      rmse_um: 16 - gain,
      r2_delta: 0.01,
      rmse_delta_um: -0.05,
      store_rows: 100 + 10 * i,
    };
  });
  return {
    interval,
    horizon_days: 364,
    baseline: { r2: 0.7, rmse_um: 16, mae_um: 12 },
    avg_r2_gain: 0.01,
    avg_rmse_reduction_um: 0.05,
    events,
    cumulative_r2_gain: [
      { day: 0, gain: 0 },
      ...events.map((e, i) => ({ day: e.day, gain: 0.01 * (i + 1) })),
    ],
  };
}

const weeklyDays = Array.from({ length: 52 }, (_, i) => 7 * (i + 1));
const quarterlyDays = [91, 182, 273, 364];

describe('step series', () => {
  it('counts one step per retraining event', () => {
    expect(countSteps(buildStepSeries(trajectory('Quarterly', quarterlyDays)))).toBe(4);
    expect(countSteps(buildStepSeries(trajectory('Weekly', weeklyDays)))).toBe(52);
  });

  it('renders 4 quarterly vs 52 weekly steps into the comparison chart', () => {
    const svg = scheduleComparisonSvg([
      trajectory('Quarterly', quarterlyDays),
      trajectory('Weekly', weeklyDays),
    ]);
    expect(svg).toContain('data-schedule="Quarterly" data-steps="4"');
    expect(svg).toContain('data-schedule="Weekly" data-steps="52"');
    expect(svg).toContain('cumulative R^2 gain');
  });
});

describe('figure charts', () => {
  it('histogram names its units and draws per-device bins', () => {
    const svg = histogramSvg({
      bin_edges_um: [-10, 0, 10, 20],
      counts: { CMM: [5, 10, 2], FaroArm: [3, 4, 6] },
    });
    expect(svg).toContain('deviation (um)');
    expect((svg.match(/class="bin"/g) ?? []).length).toBe(6);
  });

  it('temperature scatter includes the fitted lines', () => {
    const svg = temperatureScatterSvg([
      {
        device: 'CMM',
        points: [
          { temperature_c: 20, deviation_um: 10 },
          { temperature_c: 30, deviation_um: 18 },
        ],
        fit: { slope_um_per_c: 0.78, intercept_um: -5 },
      },
    ]);
    expect(svg).toContain('temperature (degC)');
    expect(svg).toContain('class="fit"');
  });

  it('anomaly map distinguishes flagged points', () => {
    const svg = anomalyScatterSvg([
      { record_id: 'a', nominal_mm: 10, deviation_um: 5, flagged: false },
      { record_id: 'b', nominal_mm: 400, deviation_um: 180, flagged: true },
    ]);
    expect(svg).toContain('class="flagged" data-id="b"');
    expect(svg).toContain('class="pt" data-id="a"');
  });
});
