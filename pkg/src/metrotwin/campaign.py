"""Factorial measurement campaign design and synthetic data generation.

The generative truth is a linear deviation model per device:

    deviation = b0 + b1 * nominal + b2 * [device is CMM] + b3 * temperature + eps

with eps ~ Normal(0, noise_sigma) and device-specific noise. Default
coefficients and sigmas come from the reference regression/statistics of
the measurement study this package reproduces. Everything is seeded and
fully deterministic: same (design, models, seed) in, same records out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .core import (
    DeviceKind,
    DimensionFeature,
    FeatureKind,
    GeometryClass,
    MeasurementRecord,
    Part,
)
from .errors import ConfigurationError, ValidationError

__all__ = [
    "DeviceModel",
    "MeasurementSlot",
    "CampaignDesign",
    "AnomalyLabel",
    "DEFAULT_DEVICE_MODELS",
    "DEFAULT_TOLERANCE_BAND_MM",
    "default_part_catalog",
    "build_design",
    "generate_measurement",
    "generate_campaign",
    "inject_anomalies",
]

DEFAULT_TOLERANCE_BAND_MM = 0.05  # ~3x device-pooled sigma, rounded up to 0.05

_OPERATORS = ("op-01", "op-02", "op-03", "op-04")
_DEFAULT_START = datetime(2025, 1, 6, 8, 0, tzinfo=timezone.utc)
_SLOT_SPACING_S = 900.0


@dataclass(frozen=True)
class DeviceModel:
    """Per-device error model: linear systematic bias plus Gaussian noise.

    ``device_offset`` is added only when the device is the CMM, matching
    the CMM=1 / FaroArm=0 regression coding.
    """

    kind: DeviceKind
    noise_sigma: float  # mm
    bias_intercept: float = -0.0152  # mm
    nominal_slope: float = 0.00015  # mm per mm of nominal
    device_offset: float = 0.0112  # mm, applied when kind is CMM
    temp_slope: float = 0.00078  # mm per degree C

    def __post_init__(self):
        if self.noise_sigma <= 0:
            raise ValidationError(f"noise_sigma must be > 0, got {self.noise_sigma}")

    def predict_mm(self, nominal_mm: float, temperature_c: float) -> float:
        """Noiseless systematic deviation for this device."""
        dev_term = self.device_offset if self.kind is DeviceKind.CMM else 0.0
        return (self.bias_intercept + self.nominal_slope * nominal_mm
                + dev_term + self.temp_slope * temperature_c)


DEFAULT_DEVICE_MODELS: dict[DeviceKind, DeviceModel] = {
    DeviceKind.CMM: DeviceModel(kind=DeviceKind.CMM, noise_sigma=0.0057),
    DeviceKind.FARO_ARM: DeviceModel(kind=DeviceKind.FARO_ARM, noise_sigma=0.0183),
}


@dataclass(frozen=True)
class MeasurementSlot:
    """One planned measurement: part x device x temperature x repetition."""

    part: Part
    feature: DimensionFeature
    device: DeviceKind
    temperature_setpoint: float  # degrees C
    repetition_index: int  # 1-based
    sequence: int  # position in the randomized execution order
    scheduled_at: datetime

    @property
    def record_id(self) -> str:
        return (f"{self.part.part_id}:{self.device.value}"
                f":T{self.temperature_setpoint:g}:rep{self.repetition_index}")


@dataclass(frozen=True)
class CampaignDesign:
    """Full factorial plan with a seeded random execution order."""

    parts: tuple[Part, ...]
    devices: tuple[DeviceKind, ...]
    temperatures: tuple[float, ...]
    repetitions: int
    execution_order: tuple[MeasurementSlot, ...]
    soak_hours: float = 4.0
    temp_jitter: float = 0.5  # uniform +- half-width around the set-point
    humidity_range: tuple[float, float] = (45.0, 55.0)

    @property
    def slot_count(self) -> int:
        return len(self.execution_order)


@dataclass(frozen=True)
class AnomalyLabel:
    record_id: str
    is_anomaly: bool
    injected_offset: float = 0.0  # mm


def default_part_catalog(tolerance_band: float = DEFAULT_TOLERANCE_BAND_MM) -> list[Part]:
    """Reference catalog: 20 parts, four per geometry class, 5-500 mm.

    Sizes are fixed so that campaigns regenerate identically; every part
    carries a single measured size feature (lengths and diameters only,
    keeping the reference campaign in homogeneous mm units). Sizes are
    spread evenly across the span: large gaps in the nominal axis would
    read as anomalies to range-based detectors.
    """
    sizes = (5.0, 31.0, 57.0, 83.0, 109.0, 135.0, 161.0, 187.0, 213.0, 240.0,
             266.0, 292.0, 318.0, 344.0, 370.0, 396.0, 422.0, 448.0, 474.0, 500.0)
    cycle = (
        (GeometryClass.CYLINDER, FeatureKind.DIAMETER, "cylinder"),
        (GeometryClass.CUBE, FeatureKind.LENGTH, "cube"),
        (GeometryClass.SPHERE, FeatureKind.DIAMETER, "sphere"),
        (GeometryClass.TURBINE_BLADE, FeatureKind.LENGTH, "turbine blade"),
        (GeometryClass.GEAR_ASSEMBLY, FeatureKind.DIAMETER, "gear assembly"),
    )
    catalog = []
    for i, nominal in enumerate(sizes):
        geom, kind, noun = cycle[i % len(cycle)]
        part_id = f"P{i + 1:02d}"
        feature = DimensionFeature(
            feature_id=f"{part_id}-F1",
            kind=kind,
            nominal_value=nominal,
            tolerance_band=tolerance_band,
        )
        catalog.append(Part(
            part_id=part_id,
            description=f"{noun} ({kind.value.lower()} {nominal:g} mm)",
            geometry_class=geom,
            features=(feature,),
        ))
    return catalog


def build_design(
    part_catalog: list[Part],
    temperatures: tuple[float, ...] = (20.0, 30.0),
    repetitions: int = 4,
    seed: int = 0,
    devices: tuple[DeviceKind, ...] = (DeviceKind.CMM, DeviceKind.FARO_ARM),
    start_time: datetime = _DEFAULT_START,
    soak_hours: float = 4.0,
) -> CampaignDesign:
    """Expand the Cartesian product of slots and randomize their order.

    The execution order is a seeded permutation; identical arguments give
    an identical design. Slot timestamps are spaced evenly from
    ``start_time`` along the execution order. The reference campaign is
    20 parts x 2 devices x 2 temperatures x 4 repetitions = 320 slots
    (eight measurements per part-device pair).
    """
    if not part_catalog:
        raise ValidationError("part catalog must not be empty")
    if repetitions < 1:
        raise ValidationError(f"repetitions must be >= 1, got {repetitions}")
    if not temperatures:
        raise ValidationError("at least one temperature set-point is required")
    if not devices:
        raise ValidationError("at least one device is required")

    base = [
        (part, part.primary_feature, device, float(temp), rep)
        for part in part_catalog
        for device in devices
        for temp in temperatures
        for rep in range(1, repetitions + 1)
    ]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(base))
    slots = tuple(
        MeasurementSlot(
            part=base[idx][0],
            feature=base[idx][1],
            device=base[idx][2],
            temperature_setpoint=base[idx][3],
            repetition_index=base[idx][4],
            sequence=pos,
            scheduled_at=start_time + timedelta(seconds=pos * _SLOT_SPACING_S),
        )
        for pos, idx in enumerate(order)
    )
    return CampaignDesign(
        parts=tuple(part_catalog),
        devices=tuple(devices),
        temperatures=tuple(float(t) for t in temperatures),
        repetitions=repetitions,
        execution_order=slots,
        soak_hours=soak_hours,
    )


def generate_measurement(
    slot: MeasurementSlot,
    device_model: DeviceModel,
    rng: np.random.Generator,
    temp_jitter: float = 0.5,
    humidity_range: tuple[float, float] = (45.0, 55.0),
) -> MeasurementRecord:
    """Synthesize one record for a slot.

    Draw order is part of the determinism contract: temperature jitter,
    humidity, noise, duration, operator.
    """
    if device_model.kind is not slot.device:
        raise ConfigurationError(
            f"device model {device_model.kind.value} does not match slot "
            f"device {slot.device.value}"
        )
    temperature = slot.temperature_setpoint + rng.uniform(-temp_jitter, temp_jitter)
    humidity = rng.uniform(*humidity_range)
    eps = rng.normal(0.0, device_model.noise_sigma) if device_model.noise_sigma > 0 else 0.0
    nominal = slot.feature.nominal_value
    deviation = device_model.predict_mm(nominal, temperature) + eps
    measured = nominal + deviation
    duration_lo, duration_hi = (240.0, 420.0) if slot.device is DeviceKind.CMM else (90.0, 210.0)
    duration = round(rng.uniform(duration_lo, duration_hi))
    operator = _OPERATORS[rng.integers(0, len(_OPERATORS))]
    # Records are self-describing: downstream featurization and angle
    # filtering read these instead of needing the part catalog at hand.
    extra = {"geometry": slot.part.geometry_class.value}
    if slot.feature.kind is FeatureKind.ANGLE:
        extra["feature_kind"] = FeatureKind.ANGLE.value
    return MeasurementRecord(
        record_id=slot.record_id,
        part_id=slot.part.part_id,
        feature_id=slot.feature.feature_id,
        device=slot.device,
        temperature=temperature,
        humidity=humidity,
        nominal_value=nominal,
        measured_value=measured,
        deviation=measured - nominal,
        tolerance_band=slot.feature.tolerance_band,
        timestamp=slot.scheduled_at,
        operator_id=operator,
        duration=duration,
        repetition_index=slot.repetition_index,
        extra=extra,
    )


def generate_campaign(
    design: CampaignDesign,
    device_models: dict[DeviceKind, DeviceModel] | None = None,
    seed: int = 0,
) -> list[MeasurementRecord]:
    """One record per slot, in execution order, deterministic per seed."""
    models = DEFAULT_DEVICE_MODELS if device_models is None else device_models
    for device in design.devices:
        if device not in models:
            raise ConfigurationError(f"no device model for {device.value}")
    rng = np.random.default_rng(seed)
    return [
        generate_measurement(
            slot, models[slot.device], rng,
            temp_jitter=design.temp_jitter,
            humidity_range=design.humidity_range,
        )
        for slot in design.execution_order
    ]


def inject_anomalies(
    records: list[MeasurementRecord],
    contamination: float,
    seed: int = 0,
    device_models: dict[DeviceKind, DeviceModel] | None = None,
) -> tuple[list[MeasurementRecord], list[AnomalyLabel]]:
    """Shift a random subset of deviations by 4-8 sigmas.

    The sigma is the pooled standard deviation of the campaign's
    deviations (floored at the record's device noise sigma), so injected
    points are unambiguous outliers in the pooled feature space where
    detection runs, not merely relative to their own device's noise.
    Every injected offset is therefore >= 4x the device noise sigma too.

    Returns the modified record list plus one label per record (in the
    same order) marking which were injected and by how much.
    """
    if not 0.0 < contamination < 0.5:
        raise ValidationError(
            f"contamination must be in (0, 0.5), got {contamination}"
        )
    models = DEFAULT_DEVICE_MODELS if device_models is None else device_models
    n = len(records)
    k = int(round(contamination * n))
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(n, size=min(k, n), replace=False).tolist())
    pooled_sigma = float(np.std([r.deviation for r in records])) if n > 1 else 0.0

    out_records: list[MeasurementRecord] = []
    labels: list[AnomalyLabel] = []
    for i, record in enumerate(records):
        if i in chosen:
            sigma = max(pooled_sigma, models[record.device].noise_sigma)
            magnitude = rng.uniform(4.0, 8.0) * sigma
            sign = 1.0 if rng.random() < 0.5 else -1.0
            offset = sign * magnitude
            shifted = record.with_deviation(record.deviation + offset)
            out_records.append(shifted)
            labels.append(AnomalyLabel(record.record_id, True, offset))
        else:
            out_records.append(record)
            labels.append(AnomalyLabel(record.record_id, False, 0.0))
    return out_records, labels
