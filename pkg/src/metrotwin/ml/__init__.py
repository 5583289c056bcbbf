"""From-scratch regression learners and the cross-validation harness."""

from .trees import TreeModel, ForestModel, GbModel, fit_cart, fit_random_forest, fit_gradient_boosting
from .svr import SvrModel, fit_svr_linear
from .mlp import MlpModel, fit_mlp
from .harness import (
    FEATURE_NAMES,
    EnsembleModel,
    EvalMetrics,
    FeatureVector,
    RegressorKind,
    RegressorSpec,
    default_spec,
    ensemble_predict,
    eval_metrics,
    featurize,
    fit_spec,
    kfold_cv,
    model_from_dict,
    model_to_dict,
)

__all__ = [
    "TreeModel", "ForestModel", "GbModel", "SvrModel", "MlpModel", "EnsembleModel",
    "fit_cart", "fit_random_forest", "fit_gradient_boosting", "fit_svr_linear", "fit_mlp",
    "FEATURE_NAMES", "EvalMetrics", "FeatureVector", "RegressorKind", "RegressorSpec",
    "default_spec", "ensemble_predict", "eval_metrics", "featurize", "fit_spec",
    "kfold_cv", "model_from_dict", "model_to_dict",
]
