// Dashboard view-model: plain state plus pure update functions, so the
// behaviour is testable without a DOM. The dashboard holds no analytics
// of its own; everything in here is bookkeeping over server responses.

import type { AlertDoc, MeasurementDoc, ModelEntry, WhatIfAnswer, WhatIfRequest } from './api.js';

export interface WhatIfHistoryEntry {
  request: WhatIfRequest;
  answer: WhatIfAnswer;
  at: string;
}

export interface AppState {
  feed: MeasurementDoc[];
  nextSeq: number;
  totalRecords: number;
  alerts: AlertDoc[];
  unreadAlerts: number;
  connected: boolean;
  models: ModelEntry[];
  activeVersion: number | null;
  whatIfHistory: WhatIfHistoryEntry[];
  retrainInFlight: boolean;
}

export const FEED_LIMIT = 200;

export function initialState(): AppState {
  return {
    feed: [],
    nextSeq: -1,
    totalRecords: 0,
    alerts: [],
    unreadAlerts: 0,
    connected: false,
    models: [],
    activeVersion: null,
    whatIfHistory: [],
    retrainInFlight: false,
  };
}

/** Append newly polled records; the feed survives across polls (no reload). */
export function applyFeedPage(
  state: AppState,
  page: { records: MeasurementDoc[]; next_seq: number; total: number },
): AppState {
  const feed = [...state.feed, ...page.records].slice(-FEED_LIMIT);
  return {
    ...state,
    feed,
    nextSeq: Math.max(state.nextSeq, page.next_seq),
    totalRecords: page.total,
  };
}

export function applyAlert(state: AppState, alert: AlertDoc): AppState {
  if (state.alerts.some((a) => a.alert_id === alert.alert_id)) return state;
  return {
    ...state,
    alerts: [...state.alerts, alert].slice(-FEED_LIMIT),
    unreadAlerts: state.unreadAlerts + 1,
  };
}

export function markAlertsRead(state: AppState): AppState {
  return { ...state, unreadAlerts: 0 };
}

export function applyConnection(state: AppState, connected: boolean): AppState {
  return { ...state, connected };
}

export function applyModels(
  state: AppState,
  payload: { models: ModelEntry[]; active_version: number | null },
): AppState {
  return { ...state, models: payload.models, activeVersion: payload.active_version };
}

export function pushWhatIf(
  state: AppState,
  request: WhatIfRequest,
  answer: WhatIfAnswer,
  at: string,
): AppState {
  const entry: WhatIfHistoryEntry = { request, answer, at };
  return { ...state, whatIfHistory: [...state.whatIfHistory, entry].slice(-25) };
}

/** Retraining is explicit and single-flight: a second click is a no-op. */
export function beginRetrain(state: AppState): AppState | null {
  if (state.retrainInFlight) return null;
  return { ...state, retrainInFlight: true };
}

export function endRetrain(state: AppState): AppState {
  return { ...state, retrainInFlight: false };
}

export function outOfTolerance(doc: MeasurementDoc): boolean {
  return Math.abs(doc.deviation_mm) > doc.tolerance_band_mm;
}

/** Validate the what-if form; returns field errors, empty when clean. */
export function validateWhatIfForm(fields: {
  nominal: string;
  device: string;
  temperature: string;
}): Partial<Record<'nominal' | 'device' | 'temperature', string>> {
  const errors: Partial<Record<'nominal' | 'device' | 'temperature', string>> = {};
  if (fields.nominal.trim() === '' || !isFinite(Number(fields.nominal))) {
    errors.nominal = 'nominal size (mm) is required';
  } else if (Number(fields.nominal) <= 0) {
    errors.nominal = 'nominal size must be positive';
  }
  if (fields.device !== 'CMM' && fields.device !== 'FaroArm') {
    errors.device = 'pick a device';
  }
  if (fields.temperature.trim() === '' || !isFinite(Number(fields.temperature))) {
    errors.temperature = 'temperature (degC) is required';
  }
  return errors;
}
