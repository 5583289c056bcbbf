import dataclasses
import threading
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from metrotwin.campaign import build_design, generate_campaign, inject_anomalies
from metrotwin.core import DeviceKind, GeometryClass, MeasurementRecord
from metrotwin.errors import ModelUnavailableError, ValidationError
from metrotwin.ml import RegressorKind, RegressorSpec
from metrotwin.runtime import (
    AlertKind,
    FeedBatch,
    LinearDeviationArtifact,
    ModelStatus,
    RetrainingSchedule,
    RetrainInterval,
    Severity,
    TwinRuntime,
    VirtualClock,
    WhatIfQuery,
    simulate_year,
    standard_year_feed,
)

T0 = datetime(2025, 3, 3, 8, 0, tzinfo=timezone.utc)

TINY_SPEC = RegressorSpec(
    kind=RegressorKind.ENSEMBLE,
    hyperparameters={"rf": {"n_trees": 3, "max_depth": 4},
                     "gb": {"n_rounds": 4, "depth": 2}},
    seed=0,
)


def make_record(i, deviation=0.01, device=DeviceKind.CMM, band=0.05,
                when=T0, nominal=50.0):
    return MeasurementRecord(
        record_id=f"R{i:04d}", part_id="P01", feature_id="P01-F1",
        device=device, temperature=20.2, humidity=50.0,
        nominal_value=nominal, measured_value=nominal + deviation,
        deviation=(nominal + deviation) - nominal, tolerance_band=band,
        timestamp=when, operator_id="op-01", duration=120, repetition_index=1,
        extra={"geometry": "Cylinder"},
    )


@pytest.fixture
def clocked_runtime():
    clock = VirtualClock(T0)
    return TwinRuntime(clock=clock, regressor_spec=TINY_SPEC, cv_folds=2,
                       min_training_rows=10), clock


class TestIngest:
    def test_sequence_numbers(self, clocked_runtime):
        runtime, _ = clocked_runtime
        acks = [runtime.ingest(make_record(i)) for i in range(3)]
        assert [a.sequence for a in acks] == [0, 1, 2]
        assert not any(a.duplicate for a in acks)

    def test_duplicate_idempotent(self, clocked_runtime):
        runtime, _ = clocked_runtime
        first = runtime.ingest(make_record(1))
        again = runtime.ingest(make_record(1))
        assert again.duplicate
        assert again.sequence == first.sequence
        assert len(runtime.store) == 1

    def test_ingestion_rate_scripted_hour(self, clocked_runtime):
        # 50 ingests across one simulated hour -> rate 50/h
        runtime, clock = clocked_runtime
        for i in range(50):
            clock.advance(seconds=3600 / 50)
            runtime.ingest(make_record(i))
        assert runtime.pipeline_stats().ingestion_rate == 50.0

    def test_rate_window_expires(self, clocked_runtime):
        runtime, clock = clocked_runtime
        runtime.ingest(make_record(0))
        clock.advance(hours=2)
        assert runtime.pipeline_stats().ingestion_rate == 0.0


class TestAlerts:
    def test_in_tolerance_no_alerts(self, clocked_runtime):
        runtime, _ = clocked_runtime
        ack = runtime.ingest(make_record(0, deviation=0.01))
        assert ack.alerts == ()

    def test_out_of_tolerance_single_alert(self, clocked_runtime):
        runtime, _ = clocked_runtime
        ack = runtime.ingest(make_record(0, deviation=0.10))  # 2x band
        assert len(ack.alerts) == 1
        alert = ack.alerts[0]
        assert alert.kind is AlertKind.OUT_OF_TOLERANCE
        assert alert.severity is Severity.WARNING
        assert alert.record_id == "R0000"

    def test_injected_anomaly_fires_detector(self, catalog):
        records = generate_campaign(build_design(catalog, seed=2), seed=2)
        runtime = TwinRuntime(clock=VirtualClock(T0))
        for rec in records:
            runtime.ingest(rec)
        runtime.train_anomaly_detector(contamination=0.05, seed=2)
        # inject a far outlier relative to pooled sigma (~27 um): +10 sigma
        base = records[5]
        shifted = dataclasses.replace(
            base.with_deviation(base.deviation + 0.27), record_id="HOT-1")
        alerts = runtime.evaluate_alerts(shifted)
        kinds = {a.kind for a in alerts}
        assert AlertKind.ANOMALY in kinds

    def test_critical_when_both_fire(self, catalog):
        records = generate_campaign(build_design(catalog, seed=3), seed=3)
        runtime = TwinRuntime(clock=VirtualClock(T0))
        for rec in records:
            runtime.ingest(rec)
        runtime.train_anomaly_detector(contamination=0.05, seed=3)
        base = records[7]
        hot = dataclasses.replace(
            base.with_deviation(base.deviation + 0.40), record_id="HOT-2")
        alerts = runtime.evaluate_alerts(hot)
        assert len(alerts) == 2
        assert all(a.severity is Severity.CRITICAL for a in alerts)

    def test_audit_alert_completeness(self, clocked_runtime):
        runtime, _ = clocked_runtime
        for i, dev in enumerate((0.01, 0.2, -0.09, 0.0)):
            runtime.ingest(make_record(i, deviation=dev))
        assert runtime.audit_out_of_tolerance() == []

    def test_subscription(self, clocked_runtime):
        runtime, _ = clocked_runtime
        seen = []
        runtime.subscribe(seen.append)
        runtime.ingest(make_record(0, deviation=0.3))
        assert len(seen) == 1
        runtime.unsubscribe(seen.append)


class TestScheduledUpdate:
    def _filled_runtime(self, catalog):
        clock = VirtualClock(T0)
        runtime = TwinRuntime(clock=clock, regressor_spec=TINY_SPEC,
                              cv_folds=2, min_training_rows=10,
                              schedule=RetrainingSchedule(min_new_rows=1))
        for rec in generate_campaign(build_design(catalog, seed=4), seed=4)[:60]:
            runtime.ingest(rec)
        return runtime, clock

    def test_noop_before_24h(self, catalog):
        runtime, clock = self._filled_runtime(catalog)
        clock.advance(hours=23)
        assert runtime.scheduled_update() is None

    def test_fires_at_24h_with_new_rows(self, catalog):
        runtime, clock = self._filled_runtime(catalog)
        clock.advance(hours=24)
        entry = runtime.scheduled_update()
        assert entry is not None
        assert entry.version == 1
        assert entry.metrics is not None
        clock.advance(hours=24)
        runtime.ingest(make_record(9999))
        entry2 = runtime.scheduled_update()
        assert entry2 is not None and entry2.version == 2

    def test_requires_new_rows(self, catalog):
        runtime, clock = self._filled_runtime(catalog)
        clock.advance(hours=24)
        assert runtime.scheduled_update() is not None
        clock.advance(hours=24)
        # no new rows since the last update
        assert runtime.scheduled_update() is None

    def test_registry_invariants(self, catalog):
        runtime, clock = self._filled_runtime(catalog)
        for _ in range(3):
            clock.advance(hours=24)
            runtime.ingest(make_record(8000 + _))
            runtime.scheduled_update()
        entries = runtime.registry.entries()
        versions = [e.version for e in entries]
        assert versions == sorted(versions) and len(set(versions)) == len(versions)
        assert sum(1 for e in entries if e.status is ModelStatus.ACTIVE) == 1
        assert runtime.registry.active().version == versions[-1]

    def test_r2_delta_recorded(self, catalog):
        runtime, clock = self._filled_runtime(catalog)
        clock.advance(hours=24)
        runtime.scheduled_update()
        for rec in generate_campaign(build_design(catalog, seed=5), seed=5)[:80]:
            runtime.ingest(rec)
        clock.advance(hours=24)
        runtime.scheduled_update()
        stats = runtime.pipeline_stats()
        assert stats.last_r2_delta is not None
        assert np.isfinite(stats.last_r2_delta)
        assert stats.convergence_time_minutes is not None

    def test_training_failure_keeps_previous_active(self, catalog):
        runtime, clock = self._filled_runtime(catalog)
        clock.advance(hours=24)
        first = runtime.scheduled_update()
        assert first is not None
        # poison the store: record without geometry metadata breaks featurize
        bad = dataclasses.replace(make_record(7777), extra={})
        runtime.ingest(bad)
        clock.advance(hours=24)
        assert runtime.scheduled_update() is None
        assert runtime.registry.active().version == first.version
        assert any(a.kind is AlertKind.RETRAINING_FAILURE for a in runtime.alerts())


class TestWhatIf:
    def test_linear_model_reference_points(self, clocked_runtime):
        runtime, _ = clocked_runtime
        runtime.publish_linear_model()
        answer = runtime.what_if(WhatIfQuery(100.0, DeviceKind.CMM, 30.0))
        assert answer.predicted_deviation_um == pytest.approx(34.4, abs=1e-9)
        assert answer.model_version == 1

    def test_temperature_contrast(self, clocked_runtime):
        runtime, _ = clocked_runtime
        runtime.publish_linear_model()
        hot = runtime.what_if(WhatIfQuery(100.0, DeviceKind.CMM, 30.0))
        cold = runtime.what_if(WhatIfQuery(100.0, DeviceKind.CMM, 20.0))
        assert hot.predicted_deviation_um - cold.predicted_deviation_um == \
            pytest.approx(7.8, abs=1e-9)

    def test_determinism(self, clocked_runtime):
        runtime, _ = clocked_runtime
        runtime.publish_linear_model()
        q = WhatIfQuery(57.0, DeviceKind.FARO_ARM, 22.5, GeometryClass.SPHERE)
        assert runtime.what_if(q) == runtime.what_if(q)

    def test_requires_active_model(self, clocked_runtime):
        runtime, _ = clocked_runtime
        with pytest.raises(ModelUnavailableError):
            runtime.what_if(WhatIfQuery(100.0, DeviceKind.CMM, 30.0))

    def test_verdict_uses_band(self, clocked_runtime):
        runtime, _ = clocked_runtime
        runtime.publish_linear_model()
        tight = runtime.what_if(WhatIfQuery(100.0, DeviceKind.CMM, 30.0,
                                            tolerance_band_mm=0.01))
        assert not tight.verdict.in_tolerance
        loose = runtime.what_if(WhatIfQuery(100.0, DeviceKind.CMM, 30.0,
                                            tolerance_band_mm=0.05))
        assert loose.verdict.in_tolerance


class TestMaintenance:
    def test_all_zero_deviations_nominal(self, clocked_runtime):
        runtime, _ = clocked_runtime
        window = [make_record(i, deviation=0.0) for i in range(25)]
        advice = runtime.maintenance_recommendation(DeviceKind.CMM, window)
        assert advice.status == "nominal"

    def test_constant_offset_triggers_recalibration(self, clocked_runtime):
        runtime, _ = clocked_runtime
        offset = 3 * 0.0057  # 3 sigma for the CMM
        window = [make_record(i, deviation=offset) for i in range(25)]
        advice = runtime.maintenance_recommendation(DeviceKind.CMM, window)
        assert advice.status == "recalibrate"
        assert any(a.kind is AlertKind.CALIBRATION_DRIFT for a in runtime.alerts())

    def test_nineteen_records_indeterminate(self, clocked_runtime):
        runtime, _ = clocked_runtime
        window = [make_record(i, deviation=0.0) for i in range(19)]
        advice = runtime.maintenance_recommendation(DeviceKind.CMM, window)
        assert advice.status == "indeterminate"

    def test_monotone_drift_triggers_recalibration(self, clocked_runtime):
        runtime, _ = clocked_runtime
        # small drift: stays under the 2-sigma mean-abs limit but rises
        window = [
            make_record(i, deviation=0.0002 * i,
                        when=T0 + timedelta(minutes=i))
            for i in range(25)
        ]
        advice = runtime.maintenance_recommendation(DeviceKind.CMM, window)
        assert advice.status == "recalibrate"
        assert "drift" in advice.reason


class TestRegistryLinearizability:
    def test_concurrent_publish_and_read(self, clocked_runtime):
        runtime, _ = clocked_runtime
        stop = threading.Event()
        errors = []

        def writer():
            version = 0
            while not stop.is_set():
                version += 1
                artifact = LinearDeviationArtifact(intercept=float(version))
                runtime.registry.publish(
                    spec={"kind": "Linear", "tag": version},
                    trained_at=T0, training_count=version,
                    metrics=None, artifact=artifact)

        def reader():
            while not stop.is_set():
                entry = runtime.registry.active()
                if entry is None:
                    continue
                # entry must be internally consistent: the artifact tag
                # published with this version must match its spec
                if entry.spec["tag"] != int(entry.artifact.intercept):
                    errors.append((entry.version, entry.spec))

        threads = [threading.Thread(target=writer)] + \
                  [threading.Thread(target=reader) for _ in range(4)]
        for t in threads:
            t.start()
        import time
        time.sleep(0.8)
        stop.set()
        for t in threads:
            t.join()
        assert errors == []
        versions = [e.version for e in runtime.registry.entries()]
        assert versions == sorted(versions)


class TestSimulateYear:
    def _tiny_feed(self, seed=0):
        # shrink the standard feed for unit-test speed
        return standard_year_feed(seed=seed, initial_rows=24, weekly_rows=4)

    TINY = RegressorSpec(
        kind=RegressorKind.ENSEMBLE,
        hyperparameters={"rf": {"n_trees": 2, "max_depth": 3},
                         "gb": {"n_rounds": 2, "depth": 2}},
        seed=0,
    )

    def test_event_counts(self):
        feed = self._tiny_feed()
        for interval, expected in ((RetrainInterval.WEEKLY, 52),
                                   (RetrainInterval.MONTHLY, 12),
                                   (RetrainInterval.QUARTERLY, 4)):
            traj = simulate_year(interval, feed, spec=self.TINY, cv_folds=2)
            assert len(traj.events) == expected, interval

    def test_determinism(self):
        feed = self._tiny_feed(seed=3)
        a = simulate_year(RetrainInterval.QUARTERLY, feed, spec=self.TINY, cv_folds=2)
        b = simulate_year(RetrainInterval.QUARTERLY, feed, spec=self.TINY, cv_folds=2)
        assert a.to_dict() == b.to_dict()

    def test_empty_feed_rejected(self):
        with pytest.raises(ValidationError):
            simulate_year(RetrainInterval.QUARTERLY, [])

    def test_trajectory_export_shape(self):
        feed = self._tiny_feed(seed=1)
        traj = simulate_year(RetrainInterval.QUARTERLY, feed, spec=self.TINY, cv_folds=2)
        doc = traj.to_dict()
        assert doc["interval"] == "Quarterly"
        assert [e["day"] for e in doc["events"]] == [91, 182, 273, 364]
        assert len(doc["cumulative_r2_gain"]) == 5  # day 0 + 4 events
        assert doc["events"][0]["store_rows"] > 24
