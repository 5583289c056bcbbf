// SVG chart builders as pure functions over server-computed figure data.
// Each chart owns its axis labels (units are always spelled out) and
// exposes its geometry so tests can count visual elements.

import type { HistogramDoc, TrajectoryDoc } from './api.js';

const W = 520;
const H = 240;
const PAD = 42;

const DEVICE_COLORS: Record<string, string> = {
  CMM: '#3a76c4',
  FaroArm: '#e08a3c',
};

function scale(domain: [number, number], range: [number, number]) {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

function axisLabels(xLabel: string, yLabel: string): string {
  return (
    `<text x="${W / 2}" y="${H - 4}" text-anchor="middle" class="axis">${xLabel}</text>` +
    `<text x="12" y="${H / 2}" text-anchor="middle" class="axis" ` +
    `transform="rotate(-90 12 ${H / 2})">${yLabel}</text>`
  );
}

/** Device-split histogram of deviations (bins computed server-side). */
export function histogramSvg(histogram: HistogramDoc): string {
  const edges = histogram.bin_edges_um;
  const devices = Object.keys(histogram.counts);
  const maxCount = Math.max(1, ...devices.flatMap((d) => histogram.counts[d]));
  const x = scale([edges[0], edges[edges.length - 1]], [PAD, W - 10]);
  const y = scale([0, maxCount], [H - PAD, 14]);
  let bars = '';
  for (const device of devices) {
    const color = DEVICE_COLORS[device] ?? '#888';
    histogram.counts[device].forEach((count, i) => {
      const x0 = x(edges[i]);
      const width = Math.max(1, x(edges[i + 1]) - x0 - 1);
      bars +=
        `<rect class="bin" data-device="${device}" x="${x0.toFixed(1)}" ` +
        `y="${y(count).toFixed(1)}" width="${width.toFixed(1)}" ` +
        `height="${(H - PAD - y(count)).toFixed(1)}" fill="${color}" fill-opacity="0.55"/>`;
    });
  }
  const legend = devices
    .map(
      (d, i) =>
        `<text x="${W - 120}" y="${20 + 16 * i}" fill="${DEVICE_COLORS[d] ?? '#888'}">${d}</text>`,
    )
    .join('');
  return svg(bars + legend + axisLabels('deviation (um)', 'count'));
}

export interface ScatterSeries {
  device: string;
  points: { temperature_c: number; deviation_um: number }[];
  fit: { slope_um_per_c: number; intercept_um: number } | null;
}

/** Temperature vs deviation scatter with the server's fitted lines. */
export function temperatureScatterSvg(series: ScatterSeries[]): string {
  const all = series.flatMap((s) => s.points);
  if (all.length === 0) return svg(axisLabels('temperature (degC)', 'deviation (um)'));
  const tx = all.map((p) => p.temperature_c);
  const ty = all.map((p) => p.deviation_um);
  const x = scale([Math.min(...tx), Math.max(...tx)], [PAD, W - 10]);
  const y = scale([Math.min(...ty), Math.max(...ty)], [H - PAD, 14]);
  let body = '';
  for (const s of series) {
    const color = DEVICE_COLORS[s.device] ?? '#888';
    body += s.points
      .map(
        (p) =>
          `<circle class="pt" data-device="${s.device}" cx="${x(p.temperature_c).toFixed(1)}" ` +
          `cy="${y(p.deviation_um).toFixed(1)}" r="2.4" fill="${color}" fill-opacity="0.5"/>`,
      )
      .join('');
    if (s.fit) {
      const t0 = Math.min(...tx);
      const t1 = Math.max(...tx);
      const y0 = s.fit.intercept_um + s.fit.slope_um_per_c * t0;
      const y1 = s.fit.intercept_um + s.fit.slope_um_per_c * t1;
      body +=
        `<line class="fit" data-device="${s.device}" x1="${x(t0).toFixed(1)}" y1="${y(y0).toFixed(1)}" ` +
        `x2="${x(t1).toFixed(1)}" y2="${y(y1).toFixed(1)}" stroke="${color}" stroke-width="2"/>`;
    }
  }
  return svg(body + axisLabels('temperature (degC)', 'deviation (um)'));
}

export interface AnomalyPoint {
  record_id: string;
  nominal_mm: number;
  deviation_um: number;
  flagged: boolean;
}

/** Nominal vs deviation scatter with flagged points marked. */
export function anomalyScatterSvg(points: AnomalyPoint[]): string {
  if (points.length === 0) return svg(axisLabels('nominal (mm)', 'deviation (um)'));
  const xs = points.map((p) => p.nominal_mm);
  const ys = points.map((p) => p.deviation_um);
  const x = scale([Math.min(...xs), Math.max(...xs)], [PAD, W - 10]);
  const y = scale([Math.min(...ys), Math.max(...ys)], [H - PAD, 14]);
  const body = points
    .map((p) =>
      p.flagged
        ? `<path class="flagged" data-id="${p.record_id}" d="M${(x(p.nominal_mm) - 4).toFixed(1)} ${(y(p.deviation_um) - 4).toFixed(1)} l8 8 m0 -8 l-8 8" stroke="#c43a3a" stroke-width="2" fill="none"/>`
        : `<circle class="pt" data-id="${p.record_id}" cx="${x(p.nominal_mm).toFixed(1)}" cy="${y(p.deviation_um).toFixed(1)}" r="2.2" fill="#777" fill-opacity="0.45"/>`,
    )
    .join('');
  return svg(body + axisLabels('nominal (mm)', 'deviation (um)'));
}

export interface StepPoint {
  day: number;
  gain: number;
}

/**
 * Step series for a retraining trajectory: one riser per retraining
 * event, so quarterly shows 4 steps and weekly 52.
 */
export function buildStepSeries(trajectory: TrajectoryDoc): StepPoint[] {
  return trajectory.cumulative_r2_gain.map((p) => ({ day: p.day, gain: p.gain }));
}

export function countSteps(series: StepPoint[]): number {
  return Math.max(0, series.length - 1); // first point is the day-0 baseline
}

const SCHEDULE_COLORS: Record<string, string> = {
  Weekly: '#3a76c4',
  Monthly: '#4caf7d',
  Quarterly: '#c43a3a',
};

export function scheduleComparisonSvg(trajectories: TrajectoryDoc[]): string {
  const seriesList = trajectories.map((t) => ({
    name: t.interval,
    horizon: t.horizon_days,
    series: buildStepSeries(t),
  }));
  const maxGain = Math.max(0.001, ...seriesList.flatMap((s) => s.series.map((p) => p.gain)));
  const horizon = Math.max(...seriesList.map((s) => s.horizon));
  const x = scale([0, horizon], [PAD, W - 10]);
  const y = scale([0, maxGain], [H - PAD, 14]);
  let body = '';
  seriesList.forEach((s, idx) => {
    const color = SCHEDULE_COLORS[s.name] ?? '#888';
    let d = `M ${x(0).toFixed(1)} ${y(0).toFixed(1)}`;
    for (const p of s.series.slice(1)) {
      d += ` H ${x(p.day).toFixed(1)} V ${y(p.gain).toFixed(1)}`;
    }
    d += ` H ${x(horizon).toFixed(1)}`;
    body +=
      `<path class="schedule" data-schedule="${s.name}" data-steps="${countSteps(s.series)}" ` +
      `d="${d}" stroke="${color}" stroke-width="2" fill="none"/>` +
      `<text x="${W - 110}" y="${20 + 16 * idx}" fill="${color}">${s.name} (${countSteps(s.series)})</text>`;
  });
  return svg(body + axisLabels('day of year', 'cumulative R^2 gain'));
}

function svg(inner: string): string {
  return (
    `<svg viewBox="0 0 ${W} ${H}" xmlns="http://www.w3.org/2000/svg" role="img">` +
    `<rect x="0" y="0" width="${W}" height="${H}" fill="#fcfcfa"/>${inner}</svg>`
  );
}
