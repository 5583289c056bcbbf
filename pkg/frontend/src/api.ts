// Typed client for the twin service. Every number the dashboard shows
// comes from these endpoints; the client never recomputes statistics.

export interface MeasurementDoc {
  schema_version: number;
  record_id: string;
  part_id: string;
  feature_id: string;
  device: 'CMM' | 'FaroArm';
  temperature_c: number;
  humidity_pct: number;
  nominal_mm: number;
  measured_mm: number;
  deviation_mm: number;
  tolerance_band_mm: number;
  timestamp_utc: string;
  operator_id: string;
  duration_s: number;
  repetition: number;
  sequence?: number;
  [extra: string]: unknown;
}

export interface IngestAck {
  sequence: number;
  record_id: string;
  duplicate: boolean;
  alerts: AlertDoc[];
}

export interface AlertDoc {
  alert_id: string;
  kind: 'OutOfTolerance' | 'Anomaly' | 'CalibrationDrift' | 'RetrainingFailure';
  severity: 'Info' | 'Warning' | 'Critical';
  record_id: string | null;
  message: string;
  created_at: string;
}

export interface WhatIfRequest {
  nominal_mm: number;
  device: 'CMM' | 'FaroArm';
  temperature_c: number;
  geometry?: string;
  tolerance_band_mm?: number;
}

export interface WhatIfAnswer {
  predicted_deviation_um: number;
  verdict: 'InTolerance' | 'OutOfTolerance';
  margin_mm: number;
  model_version: number;
}

export interface ModelMetrics {
  r2: number;
  rmse_um: number;
  mae_um: number;
}

export interface ModelEntry {
  version: number;
  spec: Record<string, unknown>;
  trained_at: string;
  training_count: number;
  metrics: ModelMetrics | null;
  status: 'Active' | 'Archived';
}

export interface TrajectoryEvent {
  day: number;
  version: number;
  r2: number;
  rmse_um: number;
  r2_delta: number;
  rmse_delta_um: number;
  store_rows: number;
}

export interface TrajectoryDoc {
  interval: 'Weekly' | 'Monthly' | 'Quarterly';
  horizon_days: number;
  baseline: { r2: number; rmse_um: number; mae_um: number };
  avg_r2_gain: number;
  avg_rmse_reduction_um: number;
  events: TrajectoryEvent[];
  cumulative_r2_gain: { day: number; gain: number }[];
}

export interface HistogramDoc {
  bin_edges_um: number[];
  counts: Record<string, number[]>;
}

export interface ScatterFit {
  slope_um_per_c: number;
  intercept_um: number;
}

export interface ReportDoc {
  n_records: number;
  tables: Record<string, any>;
  figures?: {
    deviation_histogram: HistogramDoc;
    temperature_scatter: Record<
      string,
      { points: { temperature_c: number; deviation_um: number }[]; fit: ScatterFit | null }
    >;
  };
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(response.status, body.code ?? 'error', body.message ?? response.statusText);
  }
  return body as T;
}

export class TwinApi {
  constructor(public readonly base: string) {}

  private url(path: string, params?: Record<string, string>): string {
    const u = new URL(this.base + path);
    for (const [k, v] of Object.entries(params ?? {})) u.searchParams.set(k, v);
    return u.toString();
  }

  async health(): Promise<{ status: string; records: number }> {
    return asJson(await fetch(this.url('/health')));
  }

  async measurements(params?: {
    device?: string;
    since_seq?: number;
    limit?: number;
  }): Promise<{ records: MeasurementDoc[]; next_seq: number; total: number }> {
    const query: Record<string, string> = {};
    if (params?.device) query.device = params.device;
    if (params?.since_seq !== undefined) query.since_seq = String(params.since_seq);
    if (params?.limit !== undefined) query.limit = String(params.limit);
    return asJson(await fetch(this.url('/measurements', query)));
  }

  async ingest(doc: Partial<MeasurementDoc>): Promise<IngestAck> {
    return asJson(
      await fetch(this.url('/measurements'), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(doc),
      }),
    );
  }

  async alerts(limit = 200): Promise<{ alerts: AlertDoc[]; total: number }> {
    return asJson(await fetch(this.url('/alerts', { limit: String(limit) })));
  }

  async whatIf(request: WhatIfRequest): Promise<WhatIfAnswer> {
    return asJson(
      await fetch(this.url('/whatif'), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(request),
      }),
    );
  }

  async train(cv = 5): Promise<ModelEntry> {
    return asJson(
      await fetch(this.url('/train'), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ cv }),
      }),
    );
  }

  async models(): Promise<{ models: ModelEntry[]; active_version: number | null }> {
    return asJson(await fetch(this.url('/models')));
  }

  async simulateYear(
    schedule: 'weekly' | 'monthly' | 'quarterly',
    profile: 'quick' | 'standard' = 'quick',
    seed = 0,
  ): Promise<TrajectoryDoc> {
    return asJson(
      await fetch(this.url('/simulate/year'), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ schedule, profile, seed }),
      }),
    );
  }

  async report(tables = '1,2,4'): Promise<ReportDoc> {
    return asJson(await fetch(this.url('/report', { tables })));
  }

  alertStreamUrl(): string {
    return this.url('/alerts', { stream: '1' });
  }
}
