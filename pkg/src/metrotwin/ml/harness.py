"""Model specs, featurization, k-fold cross-validation, and metrics.

Deviation models are trained on targets in micrometres so RMSE/MAE
report naturally in um; features stay in their native units
(nominal mm, device code, temperature C, geometry one-hot).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from ..core import GeometryClass, MeasurementRecord, Part, UM_PER_MM
from ..errors import DegenerateInputError, InsufficientDataError, ValidationError
from .mlp import MlpModel, fit_mlp
from .svr import SvrModel, fit_svr_linear
from .trees import ForestModel, GbModel, fit_gradient_boosting, fit_random_forest

__all__ = [
    "FEATURE_NAMES", "GEOMETRY_ORDER", "FeatureVector", "featurize",
    "RegressorKind", "RegressorSpec", "default_spec",
    "EvalMetrics", "eval_metrics", "CvResult", "kfold_cv",
    "EnsembleModel", "ensemble_predict", "fit_spec",
    "model_to_dict", "model_from_dict",
]

GEOMETRY_ORDER = tuple(GeometryClass)  # one-hot column order

FEATURE_NAMES = (
    "nominal_mm",
    "device",
    "temperature_c",
) + tuple(f"geom_{g.name.lower()}" for g in GEOMETRY_ORDER)


@dataclass(frozen=True)
class FeatureVector:
    """One model input row; exactly one geometry flag is set."""

    nominal_mm: float
    device_code: int  # CMM=1, FaroArm=0
    temperature_c: float
    geometry: GeometryClass

    def as_array(self) -> np.ndarray:
        onehot = [1.0 if g is self.geometry else 0.0 for g in GEOMETRY_ORDER]
        vec = np.array(
            [self.nominal_mm, float(self.device_code), self.temperature_c, *onehot]
        )
        if not np.all(np.isfinite(vec)):
            raise ValidationError("feature vector contains non-finite values")
        return vec


def featurize(
    records: Sequence[MeasurementRecord],
    catalog: Sequence[Part] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(X, y_um) from measurement records.

    Geometry comes from the record's own metadata when present (generated
    records are self-describing) or from the part catalog.
    """
    geometry_by_part = {}
    if catalog is not None:
        geometry_by_part = {p.part_id: p.geometry_class for p in catalog}
    rows = []
    targets = []
    for rec in records:
        geom_name = rec.extra.get("geometry")
        if geom_name is not None:
            geometry = GeometryClass(geom_name)
        elif rec.part_id in geometry_by_part:
            geometry = geometry_by_part[rec.part_id]
        else:
            raise ValidationError(
                f"record {rec.record_id}: geometry unknown (no metadata and "
                f"part {rec.part_id} not in catalog)"
            )
        fv = FeatureVector(
            nominal_mm=rec.nominal_value,
            device_code=rec.device.regression_code,
            temperature_c=rec.temperature,
            geometry=geometry,
        )
        rows.append(fv.as_array())
        targets.append(rec.deviation * UM_PER_MM)
    if not rows:
        raise InsufficientDataError("no records to featurize")
    return np.vstack(rows), np.asarray(targets)


class RegressorKind(str, Enum):
    RANDOM_FOREST = "RandomForest"
    GRADIENT_BOOSTING = "GradientBoosting"
    SVR = "SupportVectorRegression"
    MLP = "NeuralNetwork"
    ENSEMBLE = "Ensemble"


@dataclass(frozen=True)
class RegressorSpec:
    kind: RegressorKind
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "hyperparameters": dict(self.hyperparameters),
                "seed": self.seed}

    @classmethod
    def from_dict(cls, doc: dict) -> "RegressorSpec":
        return cls(kind=RegressorKind(doc["kind"]),
                   hyperparameters=dict(doc.get("hyperparameters", {})),
                   seed=int(doc.get("seed", 0)))


_DEFAULT_HYPERPARAMETERS = {
    RegressorKind.RANDOM_FOREST: {"n_trees": 200, "max_depth": 8, "min_leaf": 2},
    RegressorKind.GRADIENT_BOOSTING: {"n_rounds": 200, "learning_rate": 0.1, "depth": 3},
    RegressorKind.SVR: {"epsilon": 0.5, "lam": 1e-3, "epochs": 150},
    RegressorKind.MLP: {"hidden_units": 16, "epochs": 500, "step": 0.05},
    RegressorKind.ENSEMBLE: {},
}


def default_spec(kind: RegressorKind, seed: int = 0, **overrides) -> RegressorSpec:
    params = dict(_DEFAULT_HYPERPARAMETERS[kind])
    params.update(overrides)
    return RegressorSpec(kind=kind, hyperparameters=params, seed=seed)


@dataclass(frozen=True)
class EvalMetrics:
    r2: float
    rmse: float  # um
    mae: float  # um

    def to_dict(self) -> dict:
        return {"r2": self.r2, "rmse_um": self.rmse, "mae_um": self.mae}


def eval_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> EvalMetrics:
    """R^2, RMSE and MAE, all in the units of the inputs (um here)."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValidationError(
            f"y_true and y_pred must be same-length and nonempty, got "
            f"{y_true.shape} vs {y_pred.shape}"
        )
    sst = float(np.sum((y_true - y_true.mean()) ** 2))
    if sst == 0.0:
        raise DegenerateInputError("y_true has zero variance; R^2 is undefined")
    err = y_pred - y_true
    sse = float(err @ err)
    rmse = math.sqrt(sse / y_true.size)
    mae = float(np.mean(np.abs(err)))
    assert rmse >= mae - 1e-12, "power-mean inequality violated"
    return EvalMetrics(r2=1.0 - sse / sst, rmse=rmse, mae=mae)


@dataclass
class EnsembleModel:
    """Unweighted mean of a random forest and a gradient-boosting model."""

    rf: ForestModel
    gb: GbModel

    def __post_init__(self):
        _check_schema_match(self.rf, self.gb)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return 0.5 * (self.rf.predict(X) + self.gb.predict(X))

    @property
    def feature_names(self):
        return self.rf.feature_names

    def to_dict(self) -> dict:
        return {"rf": self.rf.to_dict(), "gb": self.gb.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict) -> "EnsembleModel":
        return cls(rf=ForestModel.from_dict(doc["rf"]), gb=GbModel.from_dict(doc["gb"]))


def _check_schema_match(rf, gb) -> None:
    if rf.n_features != gb.n_features:
        raise ValidationError(
            f"feature count mismatch: rf={rf.n_features}, gb={gb.n_features}"
        )
    if rf.feature_names and gb.feature_names and rf.feature_names != gb.feature_names:
        raise ValidationError(
            f"feature schema mismatch: {rf.feature_names} vs {gb.feature_names}"
        )


def ensemble_predict(rf: ForestModel, gb: GbModel, x: np.ndarray) -> np.ndarray:
    """Unweighted mean of the two constituent predictions."""
    _check_schema_match(rf, gb)
    return 0.5 * (rf.predict(x) + gb.predict(x))


def fit_spec(spec: RegressorSpec, X: np.ndarray, y: np.ndarray,
             feature_names: tuple[str, ...] | None = FEATURE_NAMES):
    """Train the model a spec describes; dispatch point for CV/retraining."""
    params = dict(spec.hyperparameters)
    if spec.kind is RegressorKind.RANDOM_FOREST:
        return fit_random_forest(X, y, seed=spec.seed, feature_names=feature_names, **params)
    if spec.kind is RegressorKind.GRADIENT_BOOSTING:
        return fit_gradient_boosting(X, y, seed=spec.seed, feature_names=feature_names, **params)
    if spec.kind is RegressorKind.SVR:
        return fit_svr_linear(X, y, seed=spec.seed, feature_names=feature_names, **params)
    if spec.kind is RegressorKind.MLP:
        return fit_mlp(X, y, seed=spec.seed, feature_names=feature_names, **params)
    if spec.kind is RegressorKind.ENSEMBLE:
        rf_params = params.get("rf", _DEFAULT_HYPERPARAMETERS[RegressorKind.RANDOM_FOREST])
        gb_params = params.get("gb", _DEFAULT_HYPERPARAMETERS[RegressorKind.GRADIENT_BOOSTING])
        rf = fit_random_forest(X, y, seed=spec.seed, feature_names=feature_names, **rf_params)
        gb = fit_gradient_boosting(X, y, seed=spec.seed + 1, feature_names=feature_names, **gb_params)
        return EnsembleModel(rf=rf, gb=gb)
    raise ValidationError(f"unknown regressor kind {spec.kind!r}")


@dataclass(frozen=True)
class CvResult:
    mean: EvalMetrics
    folds: tuple[EvalMetrics, ...]


def kfold_cv(spec: RegressorSpec, X: np.ndarray, y: np.ndarray,
             k: int = 5, seed: int = 0) -> CvResult:
    """Seeded shuffled k-fold CV; metrics averaged across folds."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    n = X.shape[0]
    if n < k:
        raise InsufficientDataError(f"need at least k={k} samples, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = np.array_split(perm, k)
    results = []
    for held_out in folds:
        mask = np.ones(n, dtype=bool)
        mask[held_out] = False
        model = fit_spec(spec, X[mask], y[mask])
        results.append(eval_metrics(y[held_out], model.predict(X[held_out])))
    mean = EvalMetrics(
        r2=float(np.mean([m.r2 for m in results])),
        rmse=float(np.mean([m.rmse for m in results])),
        mae=float(np.mean([m.mae for m in results])),
    )
    return CvResult(mean=mean, folds=tuple(results))


_MODEL_KINDS = {
    "forest": ForestModel,
    "gradient_boosting": GbModel,
    "svr": SvrModel,
    "mlp": MlpModel,
    "ensemble": EnsembleModel,
}


def model_to_dict(model) -> dict:
    """Versioned, JSON-serializable dump of any trained model."""
    for name, cls in _MODEL_KINDS.items():
        if isinstance(model, cls):
            return {"schema_version": 1, "kind": name, "model": model.to_dict()}
    raise ValidationError(f"cannot serialize model of type {type(model).__name__}")


def model_from_dict(doc: dict):
    version = doc.get("schema_version")
    if version != 1:
        raise ValidationError(f"unsupported model document version {version!r}")
    kind = doc.get("kind")
    if kind not in _MODEL_KINDS:
        raise ValidationError(f"unknown model kind {kind!r}")
    return _MODEL_KINDS[kind].from_dict(doc["model"])
