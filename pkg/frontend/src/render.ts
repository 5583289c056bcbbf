// Pure HTML renderers; main.ts only assigns their output to innerHTML.
// The what-if card mirrors the service response field-for-field and
// exposes each value in a data attribute for programmatic checks.

import type { AlertDoc, MeasurementDoc, ModelEntry, WhatIfAnswer } from './api.js';
import { outOfTolerance, type WhatIfHistoryEntry } from './state.js';

function esc(value: unknown): string {
  return String(value)
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderWhatIfAnswer(answer: WhatIfAnswer): string {
  const tone = answer.verdict === 'InTolerance' ? 'ok' : 'bad';
  return (
    `<div class="whatif-answer ${tone}"` +
    ` data-predicted-deviation-um="${answer.predicted_deviation_um}"` +
    ` data-verdict="${esc(answer.verdict)}"` +
    ` data-margin-mm="${answer.margin_mm}"` +
    ` data-model-version="${answer.model_version}">` +
    `<div class="big">${answer.predicted_deviation_um.toFixed(2)} um</div>` +
    `<div>predicted deviation</div>` +
    `<div>verdict: <strong>${esc(answer.verdict)}</strong>` +
    ` (margin ${answer.margin_mm.toFixed(4)} mm)</div>` +
    `<div class="muted">model version ${answer.model_version}</div>` +
    `</div>`
  );
}

export function renderWhatIfHistory(history: WhatIfHistoryEntry[]): string {
  if (history.length === 0) return '<p class="muted">no scenarios yet</p>';
  const rows = history
    .slice()
    .reverse()
    .map(
      (h) =>
        `<tr><td>${esc(h.request.nominal_mm)} mm</td><td>${esc(h.request.device)}</td>` +
        `<td>${esc(h.request.temperature_c)} degC</td>` +
        `<td>${h.answer.predicted_deviation_um.toFixed(2)} um</td>` +
        `<td>${esc(h.answer.verdict)}</td><td>v${h.answer.model_version}</td></tr>`,
    )
    .join('');
  return (
    '<table><thead><tr><th>nominal</th><th>device</th><th>temp</th>' +
    '<th>prediction</th><th>verdict</th><th>model</th></tr></thead>' +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderFeed(feed: MeasurementDoc[]): string {
  if (feed.length === 0) return '<p class="muted">waiting for measurements...</p>';
  const rows = feed
    .slice()
    .reverse()
    .slice(0, 40)
    .map((doc) => {
      const out = outOfTolerance(doc);
      return (
        `<tr class="${out ? 'out-of-tol' : ''}" data-record-id="${esc(doc.record_id)}">` +
        `<td>${esc(doc.record_id)}</td><td>${esc(doc.device)}</td>` +
        `<td>${doc.nominal_mm} mm</td>` +
        `<td>${(doc.deviation_mm * 1000).toFixed(1)} um${out ? ' &#9888;' : ''}</td>` +
        `<td>${doc.temperature_c.toFixed(1)} degC</td>` +
        `<td>${esc(doc.timestamp_utc)}</td></tr>`
      );
    })
    .join('');
  return (
    '<table><thead><tr><th>record</th><th>device</th><th>nominal (mm)</th>' +
    '<th>deviation (um)</th><th>temp (degC)</th><th>measured at (UTC)</th></tr></thead>' +
    `<tbody data-feed-rows="${feed.length}">${rows}</tbody></table>`
  );
}

const SEVERITY_ICON: Record<AlertDoc['severity'], string> = {
  Info: '&#8505;',
  Warning: '&#9888;',
  Critical: '&#10071;',
};

export function renderAlerts(alerts: AlertDoc[]): string {
  if (alerts.length === 0) return '<p class="muted">no alerts</p>';
  return alerts
    .slice()
    .reverse()
    .slice(0, 30)
    .map(
      (a) =>
        `<div class="alert sev-${a.severity.toLowerCase()}" data-alert-id="${esc(a.alert_id)}">` +
        `<span>${SEVERITY_ICON[a.severity]}</span> <strong>${esc(a.kind)}</strong> ` +
        `${esc(a.message)}${a.record_id ? ` <code>${esc(a.record_id)}</code>` : ''}` +
        `<span class="muted"> ${esc(a.created_at)}</span></div>`,
    )
    .join('');
}

export function renderModels(models: ModelEntry[], activeVersion: number | null): string {
  if (models.length === 0) return '<p class="muted">no trained models yet</p>';
  const rows = models
    .slice()
    .reverse()
    .map((m) => {
      const metrics = m.metrics
        ? `R^2 ${m.metrics.r2.toFixed(3)}, RMSE ${m.metrics.rmse_um.toFixed(2)} um`
        : 'n/a';
      const active = m.version === activeVersion ? ' <strong>(active)</strong>' : '';
      return (
        `<tr data-version="${m.version}"><td>v${m.version}${active}</td>` +
        `<td>${esc((m.spec as any).kind ?? 'model')}</td>` +
        `<td>${m.training_count} rows</td><td>${metrics}</td>` +
        `<td>${esc(m.trained_at)}</td></tr>`
      );
    })
    .join('');
  return (
    '<table><thead><tr><th>version</th><th>kind</th><th>trained on</th>' +
    `<th>CV metrics</th><th>at (UTC)</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderConnection(connected: boolean): string {
  return connected
    ? '<span class="status ok">live</span>'
    : '<span class="status bad">stale - reconnecting</span>';
}
