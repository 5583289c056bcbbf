import math
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from metrotwin.core import (
    DeviceKind,
    DimensionFeature,
    FeatureKind,
    GeometryClass,
    MeasurementRecord,
    Part,
    Verdict,
    cmm_spec_accuracy,
    compute_deviation,
    faro_spec_accuracy,
    tolerance_check,
)
from metrotwin.errors import ValidationError

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


class TestComputeDeviation:
    def test_identity_case(self):
        assert compute_deviation(50.0, 50.0) == 0.0

    def test_reference_magnitudes(self):
        assert compute_deviation(10.0023, 10.0) == pytest.approx(0.0023, abs=1e-12)
        assert compute_deviation(9.9911, 10.0) == pytest.approx(-0.0089, abs=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            compute_deviation(float("nan"), 1.0)
        with pytest.raises(ValidationError):
            compute_deviation(1.0, float("inf"))

    @given(nominal=finite, deviation=st.floats(min_value=-1e3, max_value=1e3,
                                               allow_nan=False))
    def test_round_trip(self, nominal, deviation):
        recovered = compute_deviation(nominal + deviation, nominal)
        scale = max(abs(nominal), abs(deviation), 1.0)
        assert abs(recovered - deviation) <= 2 * math.ulp(scale)


class TestToleranceCheck:
    def test_centred(self):
        v = tolerance_check(0.0, 0.05)
        assert v.verdict is Verdict.IN_TOLERANCE
        assert v.margin == pytest.approx(0.05)

    def test_boundary_inclusive(self):
        v = tolerance_check(0.05, 0.05)
        assert v.verdict is Verdict.IN_TOLERANCE
        assert v.margin == pytest.approx(0.0)

    def test_out_of_band(self):
        v = tolerance_check(-0.06, 0.05)
        assert v.verdict is Verdict.OUT_OF_TOLERANCE
        assert v.margin == pytest.approx(-0.01)

    def test_band_must_be_positive(self):
        with pytest.raises(ValidationError):
            tolerance_check(0.0, 0.0)
        with pytest.raises(ValidationError):
            tolerance_check(0.0, -0.1)

    @given(d1=finite, d2=finite, band=st.floats(min_value=1e-6, max_value=1e3))
    def test_monotone(self, d1, d2, band):
        if abs(d1) <= abs(d2) and tolerance_check(d2, band).in_tolerance:
            assert tolerance_check(d1, band).in_tolerance


class TestSpecAccuracy:
    def test_cmm_formula(self):
        assert cmm_spec_accuracy(0.0) == pytest.approx(1.5)
        assert cmm_spec_accuracy(333.0) == pytest.approx(2.5)
        assert cmm_spec_accuracy(100.0) == pytest.approx(1.5 + 100 / 333)

    def test_cmm_negative_length_rejected(self):
        with pytest.raises(ValidationError):
            cmm_spec_accuracy(-1.0)

    def test_faro_constant(self):
        assert faro_spec_accuracy() == pytest.approx(0.036)
        assert faro_spec_accuracy() * 1000 == pytest.approx(36.0)

    def test_faro_coarser_than_cmm_at_a_metre(self):
        assert faro_spec_accuracy() > cmm_spec_accuracy(1000.0) / 1000.0

    @given(a=st.floats(min_value=0, max_value=1e5),
           b=st.floats(min_value=0, max_value=1e5))
    def test_cmm_affine_and_increasing(self, a, b):
        lo, hi = sorted((a, b))
        if hi - lo > 1e-6:  # below float resolution of the formula otherwise
            assert cmm_spec_accuracy(lo) < cmm_spec_accuracy(hi)
        mid = (a + b) / 2
        expected = (cmm_spec_accuracy(a) + cmm_spec_accuracy(b)) / 2
        assert cmm_spec_accuracy(mid) == pytest.approx(expected, rel=1e-12)


def _record(**overrides):
    base = dict(
        record_id="R1", part_id="P01", feature_id="P01-F1",
        device=DeviceKind.CMM, temperature=20.1, humidity=50.0,
        nominal_value=50.0, measured_value=50.01, deviation=0.01,
        tolerance_band=0.05,
        timestamp=datetime(2025, 1, 6, 8, 0, tzinfo=timezone.utc),
        operator_id="op-01", duration=300, repetition_index=1,
    )
    base.update(overrides)
    return MeasurementRecord(**base)


class TestMeasurementRecord:
    def test_valid_record(self):
        rec = _record()
        assert rec.verdict().in_tolerance
        assert rec.deviation_um == pytest.approx(10.0)

    def test_deviation_identity_enforced(self):
        with pytest.raises(ValidationError):
            _record(deviation=0.02)

    def test_humidity_bounds(self):
        with pytest.raises(ValidationError):
            _record(humidity=101.0)

    def test_repetition_index_positive(self):
        with pytest.raises(ValidationError):
            _record(repetition_index=0)

    def test_with_deviation_keeps_identity(self):
        shifted = _record().with_deviation(0.07)
        assert shifted.deviation == shifted.measured_value - shifted.nominal_value
        assert not shifted.verdict().in_tolerance


class TestPartGeometryRules:
    def test_cylindricity_allowed_on_cylinder(self):
        feat = DimensionFeature("f", FeatureKind.CYLINDRICITY, 0.0, 0.01)
        Part("P1", "shaft", GeometryClass.CYLINDER, (feat,))

    def test_cylindricity_rejected_on_cube(self):
        feat = DimensionFeature("f", FeatureKind.CYLINDRICITY, 0.0, 0.01)
        with pytest.raises(ValidationError):
            Part("P1", "block", GeometryClass.CUBE, (feat,))

    def test_size_feature_needs_positive_nominal(self):
        with pytest.raises(ValidationError):
            DimensionFeature("f", FeatureKind.LENGTH, 0.0, 0.01)

    def test_tolerance_band_positive(self):
        with pytest.raises(ValidationError):
            DimensionFeature("f", FeatureKind.LENGTH, 10.0, 0.0)
