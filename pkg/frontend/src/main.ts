// Page wiring: poll the measurement feed, stream alerts over SSE, and
// handle the explicit operator actions (what-if, retrain, schedule
// comparison). All analytics arrive ready-made from the service.

import { TwinApi, type AlertDoc, type TrajectoryDoc, type WhatIfRequest } from './api.js';
import { anomalyScatterSvg, histogramSvg, scheduleComparisonSvg, temperatureScatterSvg } from './charts.js';
import {
  renderAlerts,
  renderConnection,
  renderFeed,
  renderModels,
  renderWhatIfAnswer,
  renderWhatIfHistory,
} from './render.js';
import {
  applyAlert,
  applyConnection,
  applyFeedPage,
  applyModels,
  beginRetrain,
  endRetrain,
  initialState,
  pushWhatIf,
  validateWhatIfForm,
} from './state.js';
import { subscribeSse } from './sse.js';

const api = new TwinApi(
  (window as any).TWIN_API_BASE ?? `${location.protocol}//${location.hostname}:8787`,
);
let state = initialState();

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

function paintFeed() {
  $('feed').innerHTML = renderFeed(state.feed);
  $('feed-total').textContent = `${state.totalRecords} stored`;
}

function paintAlerts() {
  $('alerts').innerHTML = renderAlerts(state.alerts);
  $('alert-badge').textContent = state.unreadAlerts ? String(state.unreadAlerts) : '';
  $('connection').innerHTML = renderConnection(state.connected);
}

function paintModels() {
  $('models').innerHTML = renderModels(state.models, state.activeVersion);
  const button = $('whatif-submit') as HTMLButtonElement;
  button.disabled = state.activeVersion === null;
  $('whatif-disabled-reason').textContent =
    state.activeVersion === null ? 'train a model first: what-if needs an active model' : '';
}

async function pollFeed() {
  try {
    const page = await api.measurements({ since_seq: state.nextSeq, limit: 500 });
    if (page.records.length > 0 || page.total !== state.totalRecords) {
      state = applyFeedPage(state, page);
      paintFeed();
    }
  } catch {
    /* transient; the SSE status banner covers visibility */
  }
}

async function refreshModels() {
  try {
    state = applyModels(state, await api.models());
    paintModels();
  } catch {
    /* transient */
  }
}

async function refreshCharts() {
  try {
    const report = await api.report('1,4');
    const figures = report.figures;
    if (figures) {
      $('chart-histogram').innerHTML = histogramSvg(figures.deviation_histogram);
      $('chart-scatter').innerHTML = temperatureScatterSvg(
        Object.entries(figures.temperature_scatter).map(([device, s]) => ({
          device,
          points: s.points,
          fit: s.fit,
        })),
      );
    }
    const anomaly = report.tables.anomaly_detection;
    if (anomaly?.scatter) {
      $('chart-anomaly').innerHTML = anomalyScatterSvg(anomaly.scatter);
    }
  } catch {
    /* /report needs data; retried on the next cycle */
  }
}

async function onWhatIfSubmit(event: Event) {
  event.preventDefault();
  const fields = {
    nominal: ($('wi-nominal') as HTMLInputElement).value,
    device: ($('wi-device') as HTMLSelectElement).value,
    temperature: ($('wi-temperature') as HTMLInputElement).value,
  };
  const errors = validateWhatIfForm(fields);
  $('whatif-errors').textContent = Object.values(errors).join('; ');
  if (Object.keys(errors).length > 0) return; // client-side stop, no request
  const request: WhatIfRequest = {
    nominal_mm: Number(fields.nominal),
    device: fields.device as WhatIfRequest['device'],
    temperature_c: Number(fields.temperature),
    geometry: ($('wi-geometry') as HTMLSelectElement).value,
  };
  try {
    const answer = await api.whatIf(request);
    state = pushWhatIf(state, request, answer, new Date().toISOString());
    $('whatif-answer').innerHTML = renderWhatIfAnswer(answer);
    $('whatif-history').innerHTML = renderWhatIfHistory(state.whatIfHistory);
  } catch (err: any) {
    $('whatif-errors').textContent = `service error: ${err.message ?? err}`;
  }
}

async function onRetrainClick() {
  const started = beginRetrain(state);
  if (started === null) return; // one in-flight retrain at a time
  state = started;
  const button = $('retrain') as HTMLButtonElement;
  button.disabled = true;
  button.textContent = 'training...';
  try {
    await api.train(5);
    await refreshModels();
  } catch (err: any) {
    $('whatif-errors').textContent = `retrain failed: ${err.message ?? err}`;
  } finally {
    state = endRetrain(state);
    button.disabled = false;
    button.textContent = 'retrain now';
  }
}

async function onCompareSchedules() {
  const button = $('compare-schedules') as HTMLButtonElement;
  button.disabled = true;
  button.textContent = 'simulating...';
  try {
    const trajectories: TrajectoryDoc[] = [];
    for (const schedule of ['weekly', 'monthly', 'quarterly'] as const) {
      trajectories.push(await api.simulateYear(schedule, 'quick'));
    }
    $('chart-schedules').innerHTML = scheduleComparisonSvg(trajectories);
  } catch (err: any) {
    $('chart-schedules').innerHTML = `<p class="muted">simulation failed: ${err.message ?? err}</p>`;
  } finally {
    button.disabled = false;
    button.textContent = 'compare schedules';
  }
}

function startAlertStream() {
  const controller = new AbortController();
  void subscribeSse(
    api.alertStreamUrl(),
    {
      onEvent: (event) => {
        if (event.event !== 'alert') return;
        state = applyAlert(state, JSON.parse(event.data) as AlertDoc);
        paintAlerts();
        void pollFeed(); // an alert implies a fresh record; pull it now
      },
      onStatus: (connected) => {
        state = applyConnection(state, connected);
        paintAlerts();
      },
    },
    controller.signal,
  );
  window.addEventListener('beforeunload', () => controller.abort());
}

async function init() {
  $('whatif-form').addEventListener('submit', onWhatIfSubmit);
  $('retrain').addEventListener('click', onRetrainClick);
  $('compare-schedules').addEventListener('click', onCompareSchedules);
  try {
    const existing = await api.alerts();
    for (const alert of existing.alerts) state = applyAlert(state, alert);
    state = { ...state, unreadAlerts: 0 };
  } catch {
    /* empty inbox on a fresh service */
  }
  paintAlerts();
  await pollFeed();
  await refreshModels();
  await refreshCharts();
  startAlertStream();
  setInterval(pollFeed, 2000);
  setInterval(refreshCharts, 15000);
}

void init();
