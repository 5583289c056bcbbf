"""Digital-twin core: live measurement store, synchronous alerting, a
versioned model registry with scheduled retraining, calendar-scale
retraining simulation, and decision support (what-if, maintenance).

Time is always read from an injected clock so the 24 h update cadence
and the year-long schedule replay run through the same code path, with
tests driving a virtual clock.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .anomaly import IsolationForest, detect, detection_features, fit_isolation_forest
from .campaign import (
    DEFAULT_DEVICE_MODELS,
    DEFAULT_TOLERANCE_BAND_MM,
    DeviceModel,
    build_design,
    default_part_catalog,
    generate_campaign,
)
from .core import DeviceKind, GeometryClass, MeasurementRecord, ToleranceVerdict, tolerance_check, UM_PER_MM
from .errors import InsufficientDataError, ModelUnavailableError, ValidationError
from .ml import (
    EvalMetrics,
    FeatureVector,
    RegressorKind,
    RegressorSpec,
    default_spec,
    eval_metrics,
    featurize,
    fit_spec,
    kfold_cv,
)

__all__ = [
    "VirtualClock", "SystemClock", "InMemoryStore",
    "AlertKind", "Severity", "Alert",
    "ModelStatus", "ModelRegistryEntry", "ModelRegistry", "LinearDeviationArtifact",
    "RetrainInterval", "RetrainingSchedule", "MaintenanceAdvice",
    "WhatIfQuery", "WhatIfAnswer", "PipelineStats", "IngestAck",
    "TwinRuntime", "FeedBatch", "standard_year_feed", "simulate_year",
    "RetrainEvent", "RetrainTrajectory", "STANDARD_SIM_SPEC", "HORIZON_DAYS",
]

HORIZON_DAYS = 364  # 52 exact weeks


class VirtualClock:
    """Manually advanced clock for simulations and tests."""

    def __init__(self, start: datetime):
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        self._now = start

    def now(self) -> datetime:
        return self._now

    def advance(self, *, seconds: float = 0, hours: float = 0, days: float = 0):
        self._now = self._now + timedelta(seconds=seconds, hours=hours, days=days)

    def set(self, instant: datetime):
        if instant.tzinfo is None:
            instant = instant.replace(tzinfo=timezone.utc)
        self._now = instant


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class InMemoryStore:
    """Append-only record store with snapshot reads; thread-safe."""

    def __init__(self, records: Sequence[MeasurementRecord] = ()):
        self._records: list[MeasurementRecord] = list(records)
        self._lock = threading.Lock()

    def append(self, record: MeasurementRecord) -> int:
        with self._lock:
            self._records.append(record)
            return len(self._records) - 1

    def snapshot(self) -> tuple[MeasurementRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def since(self, seq: int) -> tuple[MeasurementRecord, ...]:
        with self._lock:
            return tuple(self._records[seq + 1:])

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


class AlertKind(str, Enum):
    OUT_OF_TOLERANCE = "OutOfTolerance"
    ANOMALY = "Anomaly"
    CALIBRATION_DRIFT = "CalibrationDrift"
    RETRAINING_FAILURE = "RetrainingFailure"


class Severity(str, Enum):
    INFO = "Info"
    WARNING = "Warning"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class Alert:
    alert_id: str
    kind: AlertKind
    severity: Severity
    record_id: str | None
    message: str
    created_at: datetime

    def to_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "kind": self.kind.value,
            "severity": self.severity.value,
            "record_id": self.record_id,
            "message": self.message,
            "created_at": self.created_at.isoformat().replace("+00:00", "Z"),
        }


class ModelStatus(str, Enum):
    ACTIVE = "Active"
    ARCHIVED = "Archived"


@dataclass(frozen=True)
class ModelRegistryEntry:
    version: int
    spec: dict  # serializable description of how the artifact was trained
    trained_at: datetime
    training_count: int
    metrics: EvalMetrics | None
    status: ModelStatus
    artifact: object = field(compare=False, repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "spec": self.spec,
            "trained_at": self.trained_at.isoformat().replace("+00:00", "Z"),
            "training_count": self.training_count,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "status": self.status.value,
        }


class ModelRegistry:
    """Versioned model registry; publishing is an atomic swap.

    Entries are immutable, so readers either see the previous fully
    published entry or the new one, never a partial state. Subscribers
    (persistence hooks, notifiers) are called after the swap completes.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: list[ModelRegistryEntry] = []
        self._active: ModelRegistryEntry | None = None
        self._listeners: list[Callable[[ModelRegistryEntry], None]] = []

    def publish(self, spec: dict, trained_at: datetime, training_count: int,
                metrics: EvalMetrics | None, artifact) -> ModelRegistryEntry:
        with self._lock:
            version = self._entries[-1].version + 1 if self._entries else 1
            entry = ModelRegistryEntry(
                version=version, spec=spec, trained_at=trained_at,
                training_count=training_count, metrics=metrics,
                status=ModelStatus.ACTIVE, artifact=artifact,
            )
            self._entries = [
                replace(e, status=ModelStatus.ARCHIVED) if e.status is ModelStatus.ACTIVE else e
                for e in self._entries
            ]
            self._entries.append(entry)
            self._active = entry
            listeners = list(self._listeners)
        for listener in listeners:
            listener(entry)
        return entry

    def active(self) -> ModelRegistryEntry | None:
        return self._active  # reference read; entries are immutable

    def entries(self) -> tuple[ModelRegistryEntry, ...]:
        with self._lock:
            return tuple(self._entries)

    def subscribe(self, listener: Callable[[ModelRegistryEntry], None]):
        with self._lock:
            self._listeners.append(listener)


@dataclass(frozen=True)
class LinearDeviationArtifact:
    """Linear deviation predictor over (nominal, device, temperature).

    Prediction is in micrometres; coefficients are in mm units matching
    the campaign generator / regression convention.
    """

    intercept: float = -0.0152
    nominal_slope: float = 0.00015
    device_offset: float = 0.0112
    temp_slope: float = 0.00078

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        mm = (self.intercept + self.nominal_slope * X[:, 0]
              + self.device_offset * X[:, 1] + self.temp_slope * X[:, 2])
        return mm * UM_PER_MM

    def spec_dict(self) -> dict:
        return {
            "kind": "Linear",
            "coefficients_mm": {
                "intercept": self.intercept,
                "nominal": self.nominal_slope,
                "device": self.device_offset,
                "temperature": self.temp_slope,
            },
        }


class RetrainInterval(str, Enum):
    WEEKLY = "Weekly"
    MONTHLY = "Monthly"
    QUARTERLY = "Quarterly"

    @property
    def days(self) -> int:
        return {"Weekly": 7, "Monthly": 30, "Quarterly": 91}[self.value]


@dataclass(frozen=True)
class RetrainingSchedule:
    interval: RetrainInterval = RetrainInterval.WEEKLY
    update_cadence_hours: float = 24.0
    min_new_rows: int = 1


@dataclass(frozen=True)
class MaintenanceAdvice:
    device: DeviceKind
    status: str  # "recalibrate" | "nominal" | "indeterminate"
    reason: str
    n_records: int


@dataclass(frozen=True)
class WhatIfQuery:
    nominal_mm: float
    device: DeviceKind
    temperature_c: float
    geometry: GeometryClass = GeometryClass.CYLINDER
    tolerance_band_mm: float = DEFAULT_TOLERANCE_BAND_MM


@dataclass(frozen=True)
class WhatIfAnswer:
    predicted_deviation_um: float
    verdict: ToleranceVerdict
    model_version: int

    def to_dict(self) -> dict:
        return {
            "predicted_deviation_um": self.predicted_deviation_um,
            "verdict": self.verdict.verdict.value,
            "margin_mm": self.verdict.margin,
            "model_version": self.model_version,
        }


@dataclass(frozen=True)
class PipelineStats:
    ingestion_rate: float  # measurements per trailing hour
    last_update: datetime | None
    convergence_time_minutes: float | None
    last_r2_delta: float | None

    def to_dict(self) -> dict:
        return {
            "ingestion_rate_per_hour": self.ingestion_rate,
            "last_update": self.last_update.isoformat().replace("+00:00", "Z") if self.last_update else None,
            "convergence_time_minutes": self.convergence_time_minutes,
            "last_r2_delta": self.last_r2_delta,
        }


@dataclass(frozen=True)
class IngestAck:
    sequence: int
    record_id: str
    duplicate: bool
    alerts: tuple[Alert, ...]


class TwinRuntime:
    """Live twin: ingestion, alerting, registry, retraining, what-if."""

    def __init__(
        self,
        store: InMemoryStore | None = None,
        clock=None,
        device_models: dict[DeviceKind, DeviceModel] | None = None,
        regressor_spec: RegressorSpec | None = None,
        cv_folds: int = 5,
        schedule: RetrainingSchedule = RetrainingSchedule(),
        min_training_rows: int = 40,
    ):
        self.store = store if store is not None else InMemoryStore()
        self.clock = clock if clock is not None else SystemClock()
        self.device_models = dict(device_models or DEFAULT_DEVICE_MODELS)
        self.regressor_spec = regressor_spec or default_spec(RegressorKind.ENSEMBLE)
        self.cv_folds = cv_folds
        self.schedule = schedule
        self.min_training_rows = min_training_rows

        self.registry = ModelRegistry()
        self.forest: IsolationForest | None = None

        self._ingest_lock = threading.Lock()
        self._train_lock = threading.Lock()
        self._seen: dict[str, int] = {}
        self._ingest_times: list[datetime] = []
        self._alerts: list[Alert] = []
        self._alert_seq = 0
        self._listeners: list[Callable[[Alert], None]] = []
        self._maintenance_state: dict[DeviceKind, str] = {}

        self._last_update_at: datetime = self.clock.now()
        self._rows_since_update = 0
        self._last_r2_delta: float | None = None
        self._last_convergence_minutes: float | None = None
        self._last_published_at: datetime | None = None

        for seq, rec in enumerate(self.store.snapshot()):
            self._seen[rec.record_id] = seq

    # -- ingestion ---------------------------------------------------------

    def ingest(self, record: MeasurementRecord) -> IngestAck:
        """Append a validated record; alert evaluation runs synchronously.

        Duplicate record ids are acknowledged idempotently without a
        second append.
        """
        with self._ingest_lock:
            if record.record_id in self._seen:
                return IngestAck(
                    sequence=self._seen[record.record_id],
                    record_id=record.record_id,
                    duplicate=True,
                    alerts=(),
                )
            seq = self.store.append(record)
            self._seen[record.record_id] = seq
            self._ingest_times.append(self.clock.now())
            self._rows_since_update += 1
        alerts = self.evaluate_alerts(record)
        return IngestAck(sequence=seq, record_id=record.record_id,
                         duplicate=False, alerts=tuple(alerts))

    def evaluate_alerts(self, record: MeasurementRecord,
                        active_model: ModelRegistryEntry | None = None,
                        forest: IsolationForest | None = None) -> list[Alert]:
        """Tolerance and anomaly checks for one record.

        Absent models degrade gracefully: without a trained detector only
        tolerance alerts can fire. When both conditions fire, both alerts
        escalate to Critical.
        """
        forest = forest if forest is not None else self.forest
        verdict = record.verdict()
        fired: list[tuple[AlertKind, str]] = []
        if not verdict.in_tolerance:
            fired.append((
                AlertKind.OUT_OF_TOLERANCE,
                f"deviation {record.deviation * UM_PER_MM:+.1f} um exceeds "
                f"band +-{record.tolerance_band * UM_PER_MM:.0f} um",
            ))
        if forest is not None and forest.threshold is not None:
            score = float(forest.scores(detection_features([record]))[0])
            if score >= forest.threshold:
                fired.append((
                    AlertKind.ANOMALY,
                    f"anomaly score {score:.3f} >= threshold {forest.threshold:.3f}",
                ))
        severity = Severity.CRITICAL if len(fired) > 1 else Severity.WARNING
        return [self._emit(kind, severity, record.record_id, msg) for kind, msg in fired]

    def _emit(self, kind: AlertKind, severity: Severity,
              record_id: str | None, message: str) -> Alert:
        with self._ingest_lock:
            self._alert_seq += 1
            alert = Alert(
                alert_id=f"A{self._alert_seq:06d}",
                kind=kind,
                severity=severity,
                record_id=record_id,
                message=message,
                created_at=self.clock.now(),
            )
            self._alerts.append(alert)
            listeners = list(self._listeners)
        for listener in listeners:
            listener(alert)
        return alert

    def alerts(self) -> tuple[Alert, ...]:
        with self._ingest_lock:
            return tuple(self._alerts)

    def subscribe(self, listener: Callable[[Alert], None]):
        with self._ingest_lock:
            self._listeners.append(listener)

    def unsubscribe(self, listener: Callable[[Alert], None]):
        with self._ingest_lock:
            if listener in self._listeners:
                self._listeners.remove(listener)

    def audit_out_of_tolerance(self) -> list[str]:
        """Record ids of stored out-of-tolerance rows lacking an alert."""
        alerted = {a.record_id for a in self.alerts()
                   if a.kind is AlertKind.OUT_OF_TOLERANCE}
        return [rec.record_id for rec in self.store.snapshot()
                if not rec.verdict().in_tolerance and rec.record_id not in alerted]

    # -- statistics --------------------------------------------------------

    def pipeline_stats(self) -> PipelineStats:
        now = self.clock.now()
        cutoff = now - timedelta(hours=1)
        with self._ingest_lock:
            rate = sum(1 for t in self._ingest_times if cutoff < t <= now)
        return PipelineStats(
            ingestion_rate=float(rate),
            last_update=self._last_published_at,
            convergence_time_minutes=self._last_convergence_minutes,
            last_r2_delta=self._last_r2_delta,
        )

    # -- anomaly detector lifecycle -----------------------------------------

    def train_anomaly_detector(self, contamination: float = 0.05,
                               n_trees: int = 100, seed: int = 0) -> IsolationForest:
        """Fit the isolation forest on the full store and set its
        flagging threshold from the training scores."""
        records = self.store.snapshot()
        if len(records) < 2:
            raise InsufficientDataError("need at least 2 records to train the detector")
        X = detection_features(records)
        forest = fit_isolation_forest(X, n_trees=n_trees, seed=seed,
                                      feature_names=None)
        detect(forest, X, contamination=contamination,
               ids=[r.record_id for r in records])
        self.forest = forest
        return forest

    # -- registry / retraining ----------------------------------------------

    def publish_linear_model(self, artifact: LinearDeviationArtifact | None = None,
                             metrics: EvalMetrics | None = None) -> ModelRegistryEntry:
        """Publish a linear deviation predictor (bootstrap/baseline model).

        Metrics are evaluated against the current store when not supplied
        and enough rows exist.
        """
        artifact = artifact or LinearDeviationArtifact()
        records = self.store.snapshot()
        if metrics is None and len(records) >= 10:
            try:
                X, y = featurize(records)
                metrics = eval_metrics(y, artifact.predict(X))
            except ValidationError:
                metrics = None
        return self.registry.publish(
            spec=artifact.spec_dict(),
            trained_at=self.clock.now(),
            training_count=len(records),
            metrics=metrics,
            artifact=artifact,
        )

    def scheduled_update(self, now: datetime | None = None,
                         force: bool = False) -> ModelRegistryEntry | None:
        """Retrain and publish if the 24 h cadence and new-row gates pass.

        On training failure the previous Active entry is retained and a
        RetrainingFailure alert is emitted.
        """
        now = now if now is not None else self.clock.now()
        with self._train_lock:
            if not force:
                elapsed_h = (now - self._last_update_at).total_seconds() / 3600.0
                if elapsed_h < self.schedule.update_cadence_hours:
                    return None
                if self._rows_since_update < self.schedule.min_new_rows:
                    return None
            records = self.store.snapshot()
            if len(records) < self.min_training_rows:
                return None
            try:
                t0 = time.perf_counter()
                X, y = featurize(records)
                cv = kfold_cv(self.regressor_spec, X, y, k=self.cv_folds,
                              seed=self.regressor_spec.seed)
                artifact = fit_spec(self.regressor_spec, X, y)
                wall_minutes = (time.perf_counter() - t0) / 60.0
            except Exception as exc:  # failure must not unpublish the old model
                self._emit(AlertKind.RETRAINING_FAILURE, Severity.CRITICAL, None,
                           f"retraining failed: {exc}")
                return None
            previous = self.registry.active()
            entry = self.registry.publish(
                spec=self.regressor_spec.to_dict(),
                trained_at=now,
                training_count=len(records),
                metrics=cv.mean,
                artifact=artifact,
            )
            if previous is not None and previous.metrics is not None:
                self._last_r2_delta = cv.mean.r2 - previous.metrics.r2
            else:
                self._last_r2_delta = None
            self._last_convergence_minutes = wall_minutes
            self._last_update_at = now
            self._last_published_at = now
            self._rows_since_update = 0
            return entry

    # -- decision support ----------------------------------------------------

    def what_if(self, query: WhatIfQuery) -> WhatIfAnswer:
        """Predict the deviation for a hypothetical measurement setup."""
        entry = self.registry.active()
        if entry is None:
            raise ModelUnavailableError("no active model; train or publish one first")
        fv = FeatureVector(
            nominal_mm=query.nominal_mm,
            device_code=query.device.regression_code,
            temperature_c=query.temperature_c,
            geometry=query.geometry,
        )
        predicted_um = float(entry.artifact.predict(fv.as_array().reshape(1, -1))[0])
        verdict = tolerance_check(predicted_um / UM_PER_MM, query.tolerance_band_mm)
        return WhatIfAnswer(
            predicted_deviation_um=predicted_um,
            verdict=verdict,
            model_version=entry.version,
        )

    def maintenance_recommendation(self, device: DeviceKind,
                                   window: Sequence[MeasurementRecord] | None = None,
                                   min_records: int = 20) -> MaintenanceAdvice:
        """Recalibration advice from the recent deviation history.

        Recommends "recalibrate" when the window's mean |deviation|
        exceeds twice the device's baseline noise sigma, or when the mean
        deviation drifts monotonically across 5 consecutive sub-windows.
        Fewer than ``min_records`` rows give an indeterminate status.
        """
        if window is None:
            window = [r for r in self.store.snapshot() if r.device is device]
        window = sorted(window, key=lambda r: r.timestamp)
        n = len(window)
        if n < min_records:
            advice = MaintenanceAdvice(device, "indeterminate",
                                       f"only {n} records in window (need {min_records})", n)
            return advice

        sigma = self.device_models[device].noise_sigma
        deviations = np.array([r.deviation for r in window])
        mean_abs = float(np.mean(np.abs(deviations)))
        status, reason = "nominal", "deviations within calibration limits"
        if mean_abs > 2.0 * sigma:
            status = "recalibrate"
            reason = (f"mean |deviation| {mean_abs * UM_PER_MM:.1f} um exceeds "
                      f"2 sigma = {2 * sigma * UM_PER_MM:.1f} um")
        else:
            chunks = np.array_split(deviations, 5)
            means = [float(c.mean()) for c in chunks]
            diffs = np.diff(means)
            if np.all(diffs > 0) or np.all(diffs < 0):
                status = "recalibrate"
                reason = ("mean deviation drifts monotonically across 5 "
                          f"sub-windows: {[round(m * UM_PER_MM, 1) for m in means]} um")
        advice = MaintenanceAdvice(device, status, reason, n)
        if status == "recalibrate" and self._maintenance_state.get(device) != "recalibrate":
            self._emit(AlertKind.CALIBRATION_DRIFT, Severity.WARNING, None,
                       f"{device.value}: {reason}")
        self._maintenance_state[device] = status
        return advice


# -- calendar-scale retraining simulation -----------------------------------

# Light ensemble used by the year simulation: 68 retrain events over the
# three schedules need desk-scale fits.
STANDARD_SIM_SPEC = RegressorSpec(
    kind=RegressorKind.ENSEMBLE,
    hyperparameters={
        "rf": {"n_trees": 40, "max_depth": 8, "min_leaf": 2},
        "gb": {"n_rounds": 60, "learning_rate": 0.15, "depth": 3},
    },
    seed=0,
)


@dataclass(frozen=True)
class FeedBatch:
    day: int  # 0 = initial seed batch
    records: tuple[MeasurementRecord, ...]


def standard_year_feed(seed: int = 0, initial_rows: int = 160,
                       weekly_rows: int = 32) -> list[FeedBatch]:
    """A 52-week measurement stream: one seed batch plus weekly arrivals.

    Each week's rows come from a fresh seeded campaign; record ids are
    prefixed with the week so the stream never collides with itself.
    """
    catalog = default_part_catalog()
    base = datetime(2025, 1, 6, 8, 0, tzinfo=timezone.utc)
    batches = []
    for week in range(53):  # week 0 is the initial batch
        rows = initial_rows if week == 0 else weekly_rows
        design = build_design(catalog, seed=seed + 7000 + week,
                              start_time=base + timedelta(days=7 * week))
        records = generate_campaign(design, seed=seed + 9000 + week)[:rows]
        tagged = tuple(
            replace(rec, record_id=f"W{week:02d}:{rec.record_id}")
            for rec in records
        )
        batches.append(FeedBatch(day=7 * week, records=tagged))
    return batches


@dataclass(frozen=True)
class RetrainEvent:
    day: int
    version: int
    r2: float
    rmse_um: float
    r2_delta: float
    rmse_delta_um: float
    store_rows: int

    def to_dict(self) -> dict:
        return {
            "day": self.day, "version": self.version, "r2": self.r2,
            "rmse_um": self.rmse_um, "r2_delta": self.r2_delta,
            "rmse_delta_um": self.rmse_delta_um, "store_rows": self.store_rows,
        }


@dataclass(frozen=True)
class RetrainTrajectory:
    interval: RetrainInterval
    baseline: EvalMetrics
    events: tuple[RetrainEvent, ...]
    horizon_days: int = HORIZON_DAYS

    @property
    def avg_r2_gain(self) -> float:
        return float(np.mean([e.r2_delta for e in self.events]))

    @property
    def avg_rmse_reduction_um(self) -> float:
        return float(np.mean([-e.rmse_delta_um for e in self.events]))

    def cumulative_gain_series(self) -> list[tuple[int, float]]:
        """Day-indexed cumulative R^2 gain steps, for charting."""
        series = [(0, 0.0)]
        total = 0.0
        for e in self.events:
            total += e.r2_delta
            series.append((e.day, total))
        return series

    def to_dict(self) -> dict:
        return {
            "interval": self.interval.value,
            "horizon_days": self.horizon_days,
            "baseline": self.baseline.to_dict(),
            "avg_r2_gain": self.avg_r2_gain,
            "avg_rmse_reduction_um": self.avg_rmse_reduction_um,
            "events": [e.to_dict() for e in self.events],
            "cumulative_r2_gain": [
                {"day": d, "gain": g} for d, g in self.cumulative_gain_series()
            ],
        }


def simulate_year(
    interval: RetrainInterval | RetrainingSchedule,
    feed: Sequence[FeedBatch],
    spec: RegressorSpec | None = None,
    cv_folds: int = 5,
) -> RetrainTrajectory:
    """Replay a year of arrivals, retraining at the interval boundaries.

    Weekly gives 52 events, monthly 12 (every 30 days), quarterly 4
    (every 91 days), all within the 364-day horizon. Fully deterministic
    for a fixed feed and spec. Accepts either the interval itself or a
    full RetrainingSchedule.
    """
    if isinstance(interval, RetrainingSchedule):
        interval = interval.interval
    if not feed:
        raise ValidationError("data feed is empty")
    spec = spec or STANDARD_SIM_SPEC
    by_day: dict[int, list[FeedBatch]] = {}
    for batch in feed:
        by_day.setdefault(batch.day, []).append(batch)

    start = datetime(2025, 1, 6, 0, 0, tzinfo=timezone.utc)
    clock = VirtualClock(start)
    runtime = TwinRuntime(clock=clock, regressor_spec=spec, cv_folds=cv_folds,
                          min_training_rows=2 * cv_folds)

    def ingest_day(day: int):
        for batch in by_day.get(day, []):
            for rec in batch.records:
                runtime.ingest(rec)

    ingest_day(0)
    baseline_entry = runtime.scheduled_update(force=True)
    if baseline_entry is None or baseline_entry.metrics is None:
        raise InsufficientDataError(
            "feed's initial batch is too small to train the baseline model"
        )
    baseline = baseline_entry.metrics

    events: list[RetrainEvent] = []
    prev = baseline
    for day in range(1, HORIZON_DAYS + 1):
        clock.advance(days=1)
        ingest_day(day)
        if day % interval.days == 0:
            entry = runtime.scheduled_update(force=True)
            if entry is None or entry.metrics is None:
                continue
            events.append(RetrainEvent(
                day=day,
                version=entry.version,
                r2=entry.metrics.r2,
                rmse_um=entry.metrics.rmse,
                r2_delta=entry.metrics.r2 - prev.r2,
                rmse_delta_um=entry.metrics.rmse - prev.rmse,
                store_rows=entry.training_count,
            ))
            prev = entry.metrics
    return RetrainTrajectory(interval=interval, baseline=baseline, events=tuple(events))
