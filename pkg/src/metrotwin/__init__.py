"""metrotwin: a digital twin for dimensional-measurement campaigns.

Campaign synthesis from a linear device error model, descriptive and
inferential statistics, from-scratch regression learners under k-fold
cross-validation, isolation-forest anomaly detection, and a continuously
retrained twin runtime exposed over HTTP and a CLI.
"""

from .core import (
    DeviceKind,
    DimensionFeature,
    FeatureKind,
    GeometryClass,
    MeasurementRecord,
    Part,
    ToleranceVerdict,
    Verdict,
    cmm_spec_accuracy,
    compute_deviation,
    faro_spec_accuracy,
    tolerance_check,
)
from .campaign import (
    AnomalyLabel,
    CampaignDesign,
    DEFAULT_DEVICE_MODELS,
    DeviceModel,
    MeasurementSlot,
    build_design,
    default_part_catalog,
    generate_campaign,
    generate_measurement,
    inject_anomalies,
)
from .stats import (
    AnovaResult,
    DescriptiveStats,
    RegressionResult,
    TTestResult,
    anova_oneway,
    descriptive_stats,
    ols_fit,
    paired_t_test,
    regression_design,
)
from .anomaly import (
    DetectionReport,
    IsolationForest,
    anomaly_score,
    detect,
    detection_features,
    detection_metrics,
    fit_isolation_forest,
)
from .ml import (
    EvalMetrics,
    FeatureVector,
    RegressorKind,
    RegressorSpec,
    default_spec,
    ensemble_predict,
    eval_metrics,
    featurize,
    fit_cart,
    fit_gradient_boosting,
    fit_mlp,
    fit_random_forest,
    fit_spec,
    fit_svr_linear,
    kfold_cv,
)
from .runtime import (
    Alert,
    AlertKind,
    FeedBatch,
    InMemoryStore,
    ModelRegistry,
    ModelRegistryEntry,
    PipelineStats,
    RetrainInterval,
    RetrainingSchedule,
    Severity,
    TwinRuntime,
    VirtualClock,
    WhatIfAnswer,
    WhatIfQuery,
    simulate_year,
    standard_year_feed,
)

__version__ = "0.1.0"
