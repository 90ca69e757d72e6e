"""Scikit-learn style estimators wrapping the analogy engine and the
regression benchmark.

All estimators follow the familiar contract: hyperparameters are plain
``__init__`` arguments (so ``get_params`` / ``set_params`` / ``clone``
work), ``fit`` learns from a dataset and returns ``self``, and fitted state
lives in trailing-underscore attributes. ``fit`` takes a
:class:`~analogest.dataset.Dataset` rather than a bare matrix because
features here are named, typed, and role-bearing; everything an estimator
sees goes through the dataset's predictor-facing accessors.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from sklearn.base import BaseEstimator

from . import analogy
from .analogy import Prediction, SimilarityConfig
from .dataset import Dataset, DatasetError, ProjectCase
from .regression import (
    EFFORT_FLOOR,
    RegressionModel,
    regression_predict,
    regression_predict_raw,
    stepwise_fit,
)

Value = float | str | None


class NotFittedError(RuntimeError):
    """Estimator used before ``fit``."""


def _check_fitted(estimator: object, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )


def _training_cases(dataset: Dataset, case_ids: Sequence[str] | None):
    if case_ids is None:
        return dataset.cases
    return tuple(dataset.case(cid) for cid in case_ids)


class EffortEstimatorMixin:
    """Shared predict surface: single targets, batches, and fitted cases."""

    def predict_case(self, target_values: Mapping[str, Value]) -> float:
        raise NotImplementedError

    def predict(self, targets: Sequence[Mapping[str, Value]]) -> list[float]:
        return [self.predict_case(t) for t in targets]

    def training_artifacts(self) -> dict:
        """Everything this estimator learned from its training cases.

        Used by the evaluation harness to audit that fold-training state
        never depends on the held-out case.
        """
        raise NotImplementedError


class AnalogyEstimator(EffortEstimatorMixin, BaseEstimator):
    """k-nearest-analogy effort estimator.

    Fitting stores the case base and per-feature min/max ranges computed
    from the training cases only; targets outside a training range clamp to
    the boundary rather than rescaling the base.

    Parameters
    ----------
    k : number of donor analogies to retrieve (field guidance is 2..5).
    pooling : one of ``nearest``, ``mean``, ``inverse-distance-weighted-mean``,
        ``median``.
    adaptation : ``none`` or ``linear-size`` (scale each donor's effort by
        the target/donor ratio on the schema's size-driver feature).
    feature_subset : predictor names to use; ``None`` means all active
        predictors.
    feature_weights : per-feature non-negative weights, default 1.0 each.
    """

    def __init__(
        self,
        k: int = 3,
        pooling: str = "mean",
        adaptation: str = "none",
        feature_subset: Sequence[str] | None = None,
        feature_weights: Mapping[str, float] | None = None,
    ):
        self.k = k
        self.pooling = pooling
        self.adaptation = adaptation
        self.feature_subset = feature_subset
        self.feature_weights = feature_weights

    def fit(self, dataset: Dataset, case_ids: Sequence[str] | None = None) -> "AnalogyEstimator":
        cases = _training_cases(dataset, case_ids)
        active = [f.name for f in dataset.active_predictors()]
        if not active:
            raise DatasetError("dataset has no active predictors")
        subset = tuple(self.feature_subset) if self.feature_subset else tuple(active)
        unknown = set(subset) - set(active)
        if unknown:
            raise DatasetError(f"subset names non-predictor features: {sorted(unknown)}")
        # Weights for features outside the subset are moot (subset search may
        # have narrowed it after the weights were chosen); drop them.
        weights = {
            name: w for name, w in (self.feature_weights or {}).items() if name in subset
        }
        config = SimilarityConfig(
            feature_subset=subset,
            k=self.k,
            pooling=self.pooling,
            adaptation=self.adaptation,
            feature_weights=weights,
        )
        kinds = {f.name: f.kind for f in dataset.active_predictors()}
        ranges: dict[str, tuple[float, float]] = {}
        for name in config.effective_features():
            if kinds[name] == "categorical":
                continue
            try:
                ranges[name] = dataset.feature_range(name, cases)
            except DatasetError:
                pass  # all-missing in training: feature stays uninformative
        size = dataset.size_driver()
        if self.adaptation == "linear-size" and size is None:
            raise DatasetError("linear-size adaptation needs a size-driver feature in the schema")

        self.config_ = config
        self.ranges_ = ranges
        self.case_base_ = cases
        self.case_values_ = {c.id: dataset.predictor_values(c) for c in cases}
        self.size_feature_ = size.name if size is not None else None
        return self

    def predict_detailed(self, target_values: Mapping[str, Value]) -> Prediction:
        _check_fitted(self, "case_base_")
        return analogy.predict(
            target_values,
            self.case_base_,
            self.config_,
            self.ranges_,
            size_feature=self.size_feature_,
            case_values=self.case_values_,
        )

    def predict_case(self, target_values: Mapping[str, Value]) -> float:
        return self.predict_detailed(target_values).estimate

    def training_artifacts(self) -> dict:
        _check_fitted(self, "case_base_")
        return {
            "kind": "analogy",
            "ranges": dict(self.ranges_),
            "feature_subset": self.config_.feature_subset,
            "case_ids": tuple(c.id for c in self.case_base_),
        }


class StepwiseRegressionEstimator(EffortEstimatorMixin, BaseEstimator):
    """Stepwise OLS benchmark predictor.

    Parameters
    ----------
    alpha_enter, alpha_remove : partial-F p-value thresholds for forward
        entry and the backward check (enter must not exceed remove).
    transform : ``none`` or ``log-log``.
    """

    def __init__(
        self,
        alpha_enter: float = 0.05,
        alpha_remove: float = 0.10,
        transform: str = "none",
    ):
        self.alpha_enter = alpha_enter
        self.alpha_remove = alpha_remove
        self.transform = transform

    def fit(self, dataset: Dataset, case_ids: Sequence[str] | None = None) -> "StepwiseRegressionEstimator":
        cases = _training_cases(dataset, case_ids)
        candidates = [
            f.name for f in dataset.active_predictors() if f.kind != "categorical"
        ]
        if not candidates:
            raise DatasetError("dataset has no numeric predictors to regress on")
        # Regression sees only the predictor-facing view of each case.
        views = [
            ProjectCase(id=c.id, values=dataset.predictor_values(c), effort=c.effort)
            for c in cases
        ]
        self.model_ = stepwise_fit(
            views,
            candidates,
            alpha_enter=self.alpha_enter,
            alpha_remove=self.alpha_remove,
            transform=self.transform,
        )
        return self

    @property
    def fitted_model(self) -> RegressionModel:
        _check_fitted(self, "model_")
        return self.model_

    def predict_case(self, target_values: Mapping[str, Value]) -> float:
        _check_fitted(self, "model_")
        return regression_predict(self.model_, target_values)

    def predict_case_raw(self, target_values: Mapping[str, Value]) -> float:
        _check_fitted(self, "model_")
        return regression_predict_raw(self.model_, target_values)

    def was_floored(self, target_values: Mapping[str, Value]) -> bool:
        return self.predict_case_raw(target_values) < EFFORT_FLOOR

    def training_artifacts(self) -> dict:
        _check_fitted(self, "model_")
        return {
            "kind": "stepwise",
            "intercept": self.model_.intercept,
            "coefficients": dict(self.model_.coefficients),
            "selected_features": self.model_.selected_features,
            "transform": self.model_.transform,
        }


class MeanBaselineEstimator(EffortEstimatorMixin, BaseEstimator):
    """Predicts the mean training effort for every target."""

    def fit(self, dataset: Dataset, case_ids: Sequence[str] | None = None) -> "MeanBaselineEstimator":
        cases = _training_cases(dataset, case_ids)
        self.mean_effort_ = sum(c.effort for c in cases) / len(cases)
        return self

    def predict_case(self, target_values: Mapping[str, Value]) -> float:
        _check_fitted(self, "mean_effort_")
        return self.mean_effort_

    def training_artifacts(self) -> dict:
        _check_fitted(self, "mean_effort_")
        return {"kind": "mean-baseline", "mean_effort": self.mean_effort_}
