"""Analogy-based software project effort estimation with a reproducible
evaluation harness."""

from .analogy import (
    Donor,
    Prediction,
    SimilarityConfig,
    case_distance,
    normalize,
    pool,
    predict,
    retrieve,
)
from .dataset import (
    Dataset,
    DatasetError,
    FeatureDef,
    ProjectCase,
    active_predictors,
    feature_range,
    load_dataset,
    write_dataset,
)
from .estimators import (
    AnalogyEstimator,
    MeanBaselineEstimator,
    StepwiseRegressionEstimator,
)
from .harness import (
    ComparisonRecord,
    LoocvRun,
    MetricSpec,
    SubsetSearchSpec,
    run_loocv,
    sensitivity_curve,
    subset_search,
    vote_count,
)
from .metrics import (
    MetricResult,
    ResidualEntry,
    ResidualSet,
    bootstrap_ci,
    cohens_d,
    mar,
    mdmre,
    mmre,
    pred,
    standardised_accuracy,
)
from .regression import (
    RegressionModel,
    ols_fit,
    regression_predict,
    stepwise_fit,
)

__version__ = "0.1.0"

__all__ = [
    "AnalogyEstimator",
    "ComparisonRecord",
    "Dataset",
    "DatasetError",
    "Donor",
    "FeatureDef",
    "LoocvRun",
    "MeanBaselineEstimator",
    "MetricResult",
    "MetricSpec",
    "Prediction",
    "ProjectCase",
    "RegressionModel",
    "ResidualEntry",
    "ResidualSet",
    "SimilarityConfig",
    "StepwiseRegressionEstimator",
    "SubsetSearchSpec",
    "active_predictors",
    "bootstrap_ci",
    "case_distance",
    "cohens_d",
    "feature_range",
    "load_dataset",
    "mar",
    "mdmre",
    "mmre",
    "normalize",
    "ols_fit",
    "pool",
    "pred",
    "predict",
    "regression_predict",
    "retrieve",
    "run_loocv",
    "sensitivity_curve",
    "standardised_accuracy",
    "stepwise_fit",
    "subset_search",
    "vote_count",
    "write_dataset",
]
