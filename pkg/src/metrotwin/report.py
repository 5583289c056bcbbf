"""Report document assembly: table analogues and figure-data exports.

This is the reporting boundary, so micrometre conversions happen here
and every numeric key names its unit. The CLI `report` command and the
service's GET /report both call build_report, which keeps their numbers
identical by construction.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .anomaly import detect, detection_features, detection_metrics, fit_isolation_forest
from .campaign import AnomalyLabel
from .core import DeviceKind, MeasurementRecord, Part, UM_PER_MM
from .errors import InsufficientDataError
from .ml import RegressorKind, default_spec, featurize, kfold_cv
from .stats import descriptive_stats, ols_fit, regression_design

__all__ = ["SECTION_TABLE_NUMBERS", "build_report"]

# Table-number aliases for section selection (CLI --tables 1-6).
SECTION_TABLE_NUMBERS = {
    1: "device_stats",
    2: "regression",
    3: "model_comparison",
    4: "anomaly_detection",
    5: "retraining_comparison",
    6: "pipeline_metrics",
}

_COMPARISON_KINDS = (
    RegressorKind.RANDOM_FOREST,
    RegressorKind.GRADIENT_BOOSTING,
    RegressorKind.SVR,
    RegressorKind.MLP,
    RegressorKind.ENSEMBLE,
)


def _device_stats_section(records: Sequence[MeasurementRecord]) -> dict:
    out = {}
    for device in DeviceKind:
        deviations = [r.deviation for r in records if r.device is device]
        if len(deviations) < 2:
            continue
        stats = descriptive_stats(deviations)
        out[device.value] = {
            "n": stats.n,
            "mean_deviation_mm": stats.mean,
            "std_deviation_mm": stats.sample_std,
            "range_mm": stats.range,
            "ci95_of_mean_mm": list(stats.ci95),
            "pi95_individual_mm": list(stats.pi95),
        }
    return {
        "note": ("ci95_of_mean_mm is the confidence interval for the mean; "
                 "pi95_individual_mm is the wider predictive interval for a "
                 "single future deviation"),
        "devices": out,
    }


def _regression_section(records: Sequence[MeasurementRecord]) -> dict:
    X, y = regression_design(records)
    result = ols_fit(X, y)
    rows = []
    for i, term in enumerate(result.terms):
        rows.append({
            "term": term,
            "coefficient_mm": float(result.coefficients[i]),
            "std_error_mm": float(result.std_errors[i]),
            "t_stat": float(result.t_stats[i]),
            "p_value": float(result.p_values[i]),
        })
    return {"n": result.n, "r_squared": result.r_squared, "coefficients": rows}


def _model_comparison_section(records: Sequence[MeasurementRecord],
                              parts: Sequence[Part] | None,
                              seed: int, cv_folds: int) -> dict:
    X, y = featurize(records, catalog=parts)
    rows = []
    for kind in _COMPARISON_KINDS:
        cv = kfold_cv(default_spec(kind, seed=seed), X, y, k=cv_folds, seed=seed)
        rows.append({
            "model": kind.value,
            "r2": cv.mean.r2,
            "rmse_um": cv.mean.rmse,
            "mae_um": cv.mean.mae,
        })
    return {"cv_folds": cv_folds, "seed": seed, "models": rows}


def _anomaly_section(records: Sequence[MeasurementRecord],
                     labels: Sequence[AnomalyLabel] | None,
                     contamination: float, seed: int) -> dict:
    X = detection_features(records)
    forest = fit_isolation_forest(X, seed=seed)
    result = detect(forest, X, contamination=contamination,
                    ids=[r.record_id for r in records])
    section = {
        "contamination": contamination,
        "threshold_score": result.threshold,
        "n_flagged": len(result.flagged_ids),
        "flagged_ids": list(result.flagged_ids),
    }
    if labels is not None:
        rep = detection_metrics(result.flagged_ids, labels)
        section.update({"tpr": rep.tpr, "fpr": rep.fpr, "f1": rep.f1})
    # Fig-style export: nominal vs deviation with flags.
    section["scatter"] = [
        {
            "record_id": rec.record_id,
            "nominal_mm": rec.nominal_value,
            "deviation_um": rec.deviation * UM_PER_MM,
            "flagged": bool(result.flags[i]),
        }
        for i, rec in enumerate(records)
    ]
    return section


def _fit_line(x: np.ndarray, y: np.ndarray) -> dict:
    slope, intercept = np.polyfit(x, y, 1)
    return {"slope_um_per_c": float(slope), "intercept_um": float(intercept)}


def _figures_section(records: Sequence[MeasurementRecord]) -> dict:
    deviations_um = {
        device: np.array([r.deviation * UM_PER_MM for r in records if r.device is device])
        for device in DeviceKind
    }
    present = [d for d, v in deviations_um.items() if v.size > 0]
    histogram = {}
    if present:
        all_dev = np.concatenate([deviations_um[d] for d in present])
        edges = np.histogram_bin_edges(all_dev, bins=24)
        histogram = {
            "bin_edges_um": edges.tolist(),
            "counts": {
                d.value: np.histogram(deviations_um[d], bins=edges)[0].tolist()
                for d in present
            },
        }
    scatter = {}
    for device in present:
        recs = [r for r in records if r.device is device]
        temps = np.array([r.temperature for r in recs])
        devs = np.array([r.deviation * UM_PER_MM for r in recs])
        scatter[device.value] = {
            "points": [{"temperature_c": float(t), "deviation_um": float(d)}
                       for t, d in zip(temps, devs)],
            "fit": _fit_line(temps, devs) if len(recs) >= 2 else None,
        }
    return {"deviation_histogram": histogram, "temperature_scatter": scatter}


def build_report(
    records: Sequence[MeasurementRecord],
    labels: Sequence[AnomalyLabel] | None = None,
    parts: Sequence[Part] | None = None,
    tables: Sequence[int] = (1, 2, 3, 4, 5, 6),
    seed: int = 0,
    cv_folds: int = 5,
    contamination: float = 0.05,
    trajectories: dict | None = None,
    pipeline: dict | None = None,
    include_figures: bool = True,
) -> dict:
    """Assemble the report sections requested by table number.

    Sections that need inputs not provided (simulation trajectories,
    live pipeline stats) are emitted with a status note instead of
    failing, so `report --tables 1-6` always succeeds on a plain
    campaign file.
    """
    if not records:
        raise InsufficientDataError("no records to report on")
    report: dict = {"n_records": len(records), "tables": {}}
    wanted = {SECTION_TABLE_NUMBERS[t] for t in tables}

    if "device_stats" in wanted:
        report["tables"]["device_stats"] = _device_stats_section(records)
    if "regression" in wanted:
        report["tables"]["regression"] = _regression_section(records)
    if "model_comparison" in wanted:
        report["tables"]["model_comparison"] = _model_comparison_section(
            records, parts, seed, cv_folds)
    if "anomaly_detection" in wanted:
        report["tables"]["anomaly_detection"] = _anomaly_section(
            records, labels, contamination, seed)
    if "retraining_comparison" in wanted:
        if trajectories:
            report["tables"]["retraining_comparison"] = {
                "schedules": {
                    name: (traj if isinstance(traj, dict) else traj.to_dict())
                    for name, traj in trajectories.items()
                },
            }
        else:
            report["tables"]["retraining_comparison"] = {
                "status": "not computed: provide simulate-year trajectories",
            }
    if "pipeline_metrics" in wanted:
        report["tables"]["pipeline_metrics"] = pipeline or {
            "status": "not computed: requires a running twin service",
        }
    if include_figures:
        report["figures"] = _figures_section(records)
    return report
