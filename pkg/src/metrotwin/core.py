"""Domain vocabulary: parts, devices, measurements, deviations, verdicts.

Everything here is an immutable value object; operations are pure. The
canonical internal unit is millimetres (degrees for angle features);
micrometres appear only at reporting boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum

from .errors import ValidationError

__all__ = [
    "DeviceKind",
    "FeatureKind",
    "GeometryClass",
    "DimensionFeature",
    "Part",
    "MeasurementRecord",
    "Verdict",
    "ToleranceVerdict",
    "compute_deviation",
    "tolerance_check",
    "cmm_spec_accuracy",
    "faro_spec_accuracy",
    "PERMITTED_FEATURE_KINDS",
    "MM_PER_UM",
    "UM_PER_MM",
]

UM_PER_MM = 1000.0
MM_PER_UM = 1.0 / UM_PER_MM

# Absolute slack on the measured - nominal = deviation identity.
DEVIATION_IDENT_TOL_MM = 1e-12


class DeviceKind(str, Enum):
    CMM = "CMM"
    FARO_ARM = "FaroArm"

    @property
    def regression_code(self) -> int:
        """Binary coding used everywhere a device enters a design matrix.

        CMM maps to 1 and FaroArm to 0, so the fitted device coefficient
        reads as the CMM-minus-FARO mean deviation gap.
        """
        return 1 if self is DeviceKind.CMM else 0


class GeometryClass(str, Enum):
    CYLINDER = "Cylinder"
    CUBE = "Cube"
    SPHERE = "Sphere"
    TURBINE_BLADE = "TurbineBlade"
    GEAR_ASSEMBLY = "GearAssembly"


class FeatureKind(str, Enum):
    LENGTH = "Length"
    WIDTH = "Width"
    DIAMETER = "Diameter"
    ANGLE = "Angle"
    FLATNESS = "Flatness"
    CYLINDRICITY = "Cylindricity"

    @property
    def is_size(self) -> bool:
        return self in (FeatureKind.LENGTH, FeatureKind.WIDTH, FeatureKind.DIAMETER)

    @property
    def is_form(self) -> bool:
        return self in (FeatureKind.FLATNESS, FeatureKind.CYLINDRICITY)

    @property
    def unit(self) -> str:
        return "deg" if self is FeatureKind.ANGLE else "mm"


# Which feature kinds make sense on which geometry.
PERMITTED_FEATURE_KINDS: dict[GeometryClass, frozenset[FeatureKind]] = {
    GeometryClass.CYLINDER: frozenset(
        {FeatureKind.LENGTH, FeatureKind.DIAMETER, FeatureKind.CYLINDRICITY}
    ),
    GeometryClass.CUBE: frozenset(
        {FeatureKind.LENGTH, FeatureKind.WIDTH, FeatureKind.FLATNESS}
    ),
    GeometryClass.SPHERE: frozenset({FeatureKind.DIAMETER}),
    GeometryClass.TURBINE_BLADE: frozenset(
        {FeatureKind.LENGTH, FeatureKind.WIDTH, FeatureKind.ANGLE, FeatureKind.FLATNESS}
    ),
    GeometryClass.GEAR_ASSEMBLY: frozenset(
        {FeatureKind.DIAMETER, FeatureKind.WIDTH, FeatureKind.ANGLE, FeatureKind.CYLINDRICITY}
    ),
}


def _require_finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class DimensionFeature:
    """One measurable dimension of a part.

    nominal_value and tolerance_band are in mm, except for Angle features
    which carry degrees. The tolerance band is the symmetric half-width.
    """

    feature_id: str
    kind: FeatureKind
    nominal_value: float
    tolerance_band: float

    def __post_init__(self):
        _require_finite("nominal_value", self.nominal_value)
        _require_finite("tolerance_band", self.tolerance_band)
        if self.tolerance_band <= 0:
            raise ValidationError(
                f"feature {self.feature_id}: tolerance_band must be > 0, "
                f"got {self.tolerance_band}"
            )
        if self.kind.is_size and self.nominal_value <= 0:
            raise ValidationError(
                f"feature {self.feature_id}: nominal_value must be > 0 for "
                f"size features, got {self.nominal_value}"
            )
        if self.nominal_value < 0:
            raise ValidationError(
                f"feature {self.feature_id}: nominal_value must be >= 0"
            )


@dataclass(frozen=True)
class Part:
    part_id: str
    description: str
    geometry_class: GeometryClass
    features: tuple[DimensionFeature, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        permitted = PERMITTED_FEATURE_KINDS[self.geometry_class]
        for feat in self.features:
            if feat.kind not in permitted:
                raise ValidationError(
                    f"part {self.part_id}: feature kind {feat.kind.value} not "
                    f"permitted on geometry {self.geometry_class.value}"
                )
        ids = [f.feature_id for f in self.features]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"part {self.part_id}: duplicate feature ids")

    @property
    def primary_feature(self) -> DimensionFeature:
        if not self.features:
            raise ValidationError(f"part {self.part_id} has no features")
        return self.features[0]


@dataclass(frozen=True)
class MeasurementRecord:
    """One physical measurement event.

    ``deviation`` must equal ``measured_value - nominal_value`` to within
    1e-12 mm; construction enforces it. ``extra`` carries unknown fields
    found during parsing so serialization round-trips losslessly.
    """

    record_id: str
    part_id: str
    feature_id: str
    device: DeviceKind
    temperature: float  # degrees C
    humidity: float  # percent relative
    nominal_value: float  # mm
    measured_value: float  # mm
    deviation: float  # mm
    tolerance_band: float  # mm, symmetric half-width
    timestamp: datetime  # UTC
    operator_id: str
    duration: float  # seconds
    repetition_index: int
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("temperature", "humidity", "nominal_value", "measured_value",
                     "deviation", "tolerance_band", "duration"):
            _require_finite(name, getattr(self, name))
        if abs(self.deviation - (self.measured_value - self.nominal_value)) > DEVIATION_IDENT_TOL_MM:
            raise ValidationError(
                f"record {self.record_id}: deviation {self.deviation} != "
                f"measured - nominal = {self.measured_value - self.nominal_value}"
            )
        if not 0.0 <= self.humidity <= 100.0:
            raise ValidationError(
                f"record {self.record_id}: humidity {self.humidity} outside [0, 100]"
            )
        if self.tolerance_band <= 0:
            raise ValidationError(
                f"record {self.record_id}: tolerance_band must be > 0"
            )
        if self.repetition_index < 1:
            raise ValidationError(
                f"record {self.record_id}: repetition_index must be >= 1"
            )
        if self.timestamp.tzinfo is None:
            object.__setattr__(self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc))

    @property
    def deviation_um(self) -> float:
        return self.deviation * UM_PER_MM

    def verdict(self) -> "ToleranceVerdict":
        return tolerance_check(self.deviation, self.tolerance_band)

    def with_deviation(self, deviation_mm: float) -> "MeasurementRecord":
        """Copy with a shifted deviation; measured value moves with it."""
        measured = self.nominal_value + deviation_mm
        return replace(self, measured_value=measured,
                       deviation=measured - self.nominal_value)


class Verdict(str, Enum):
    IN_TOLERANCE = "InTolerance"
    OUT_OF_TOLERANCE = "OutOfTolerance"


@dataclass(frozen=True)
class ToleranceVerdict:
    verdict: Verdict
    margin: float  # mm to the nearer limit; negative when out of tolerance

    @property
    def in_tolerance(self) -> bool:
        return self.verdict is Verdict.IN_TOLERANCE


def compute_deviation(measured: float, nominal: float) -> float:
    """Measured minus nominal, both in mm (degrees for angles)."""
    _require_finite("measured", measured)
    _require_finite("nominal", nominal)
    return measured - nominal


def tolerance_check(deviation: float, band: float) -> ToleranceVerdict:
    """Classify a deviation against a symmetric tolerance band.

    The band limit itself is in tolerance; margin is the distance to the
    nearer limit and goes negative once the band is exceeded.
    """
    _require_finite("deviation", deviation)
    _require_finite("band", band)
    if band <= 0:
        raise ValidationError(f"tolerance band must be > 0, got {band}")
    margin = band - abs(deviation)
    verdict = Verdict.IN_TOLERANCE if margin >= 0 else Verdict.OUT_OF_TOLERANCE
    return ToleranceVerdict(verdict=verdict, margin=margin)


def cmm_spec_accuracy(length_mm: float) -> float:
    """CMM spec envelope half-width in micrometres: 1.5 + L/333.

    ``length_mm`` is the measured length L in mm.
    """
    _require_finite("length_mm", length_mm)
    if length_mm < 0:
        raise ValidationError(f"length must be >= 0, got {length_mm}")
    return 1.5 + length_mm / 333.0


def faro_spec_accuracy() -> float:
    """FARO arm spec accuracy half-width, in millimetres (constant)."""
    return 0.036
