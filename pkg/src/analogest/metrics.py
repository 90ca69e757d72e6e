"""Prediction accuracy metrics, bootstrap confidence intervals, and effect
sizes.

Point metrics are computed in plain arithmetic with a fixed evaluation
order, so results are bit-reproducible across runs and thread counts.
MMRE applies absolute values to the relative errors: without them, over-
and under-estimates cancel and the average loses its meaning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .dataset import Dataset


class MetricError(ValueError):
    """Raised on empty residual sets or degenerate metric inputs."""


@dataclass(frozen=True)
class ResidualEntry:
    case_id: str
    actual: float
    predicted: float

    @property
    def absolute_residual(self) -> float:
        return abs(self.actual - self.predicted)

    @property
    def mre(self) -> float:
        """Magnitude of relative error, as a fraction of the actual."""
        return abs(self.actual - self.predicted) / self.actual


@dataclass(frozen=True)
class ResidualSet:
    """Out-of-sample (actual, predicted) pairs for one predictor on one dataset."""

    entries: tuple[ResidualEntry, ...]
    predictor_label: str = ""
    dataset_label: str = ""

    def __post_init__(self) -> None:
        ids = [e.case_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise MetricError("duplicate case id in residual set")
        if any(e.actual <= 0 for e in self.entries):
            raise MetricError("actual efforts must be positive")

    def __len__(self) -> int:
        return len(self.entries)

    def resample(self, indices: Iterable[int]) -> "ResidualSet":
        return _unchecked_set(
            tuple(self.entries[i] for i in indices),
            self.predictor_label,
            self.dataset_label,
        )


@dataclass(frozen=True)
class MetricResult:
    name: str
    value: float
    ci_low: float
    ci_high: float
    confidence_level: float
    n: int
    bootstrap_b: int
    seed: int


def _require_entries(residuals: ResidualSet) -> tuple[ResidualEntry, ...]:
    if not residuals.entries:
        raise MetricError("residual set is empty")
    return residuals.entries


def mmre(residuals: ResidualSet) -> float:
    """Mean magnitude of relative error, in percent."""
    entries = _require_entries(residuals)
    total = 0.0
    for e in entries:
        total += e.mre
    return total / len(entries) * 100.0


def mdmre(residuals: ResidualSet) -> float:
    """Median magnitude of relative error, in percent."""
    entries = _require_entries(residuals)
    return _median([e.mre for e in entries]) * 100.0


def pred(residuals: ResidualSet, threshold_percent: float = 25.0) -> float:
    """Proportion of predictions within ``threshold_percent`` of the actual.

    The boundary counts as inside.
    """
    if threshold_percent <= 0:
        raise MetricError("threshold must be positive")
    entries = _require_entries(residuals)
    within = sum(1 for e in entries if e.mre <= threshold_percent / 100.0)
    return within / len(entries)


def mar(residuals: ResidualSet) -> float:
    """Mean absolute residual, in effort units."""
    entries = _require_entries(residuals)
    total = 0.0
    for e in entries:
        total += e.absolute_residual
    return total / len(entries)


def random_guess_mar(efforts: Sequence[float]) -> float:
    """Exact expected MAR of guessing another case's effort uniformly.

    For each case i this is the mean of |Y_i - Y_j| over all j != i,
    averaged over i. Closed form, no sampling.
    """
    n = len(efforts)
    if n < 2:
        raise MetricError("need at least 2 cases for the random-guess baseline")
    total = 0.0
    for i in range(n):
        inner = 0.0
        for j in range(n):
            if j != i:
                inner += abs(efforts[i] - efforts[j])
        total += inner / (n - 1)
    return total / n


def standardised_accuracy(residuals: ResidualSet, dataset: Dataset | Sequence[float]) -> float:
    """SA = (1 - MAR / MAR_random_guess) * 100.

    100 is a perfect predictor; 0 means no better than guessing another
    case's effort at random. ``dataset`` supplies the effort population for
    the guessing baseline (a Dataset or a bare effort sequence).
    """
    efforts = (
        [c.effort for c in dataset.cases] if isinstance(dataset, Dataset) else list(dataset)
    )
    baseline = random_guess_mar(efforts)
    if baseline == 0:
        raise MetricError("all efforts are equal, random-guess MAR is zero")
    return (1.0 - mar(residuals) / baseline) * 100.0


def cohens_d(residuals_a: ResidualSet, residuals_b: ResidualSet) -> float:
    """Standardized mean difference of absolute residuals (a minus b).

    Positive d means predictor a has the larger error. Pooled-variance
    denominator; zero pooled variance with unequal means yields +/-inf.
    """
    a = [e.absolute_residual for e in _require_entries(residuals_a)]
    b = [e.absolute_residual for e in _require_entries(residuals_b)]
    n1, n2 = len(a), len(b)
    if n1 + n2 < 3:
        raise MetricError("need at least 3 residuals across both sets")
    mean_a = sum(a) / n1
    mean_b = sum(b) / n2
    var_a = sum((x - mean_a) ** 2 for x in a) / (n1 - 1) if n1 > 1 else 0.0
    var_b = sum((x - mean_b) ** 2 for x in b) / (n2 - 1) if n2 > 1 else 0.0
    pooled = math.sqrt(((n1 - 1) * var_a + (n2 - 1) * var_b) / (n1 + n2 - 2))
    diff = mean_a - mean_b
    if pooled == 0:
        if diff == 0:
            return 0.0
        return math.inf if diff > 0 else -math.inf
    return diff / pooled


def bootstrap_ci(
    residuals: ResidualSet,
    metric_function: Callable[[ResidualSet], float],
    b: int = 1000,
    confidence_level: float = 0.95,
    seed: int = 0,
    name: str = "metric",
) -> MetricResult:
    """Percentile bootstrap interval for a metric of a residual set.

    The point value is computed on the original set. Resample index draws
    are generated up front from the seed, so results are independent of
    evaluation order. A resample on which the metric errors is redrawn from
    a per-index substream, with a total budget of 10*b redraws.
    """
    if b < 100:
        raise MetricError("bootstrap requires b >= 100")
    if not 0 < confidence_level < 1:
        raise MetricError("confidence level must be in (0, 1)")
    entries = _require_entries(residuals)
    n = len(entries)
    value = metric_function(residuals)

    rng = np.random.default_rng(seed)
    index_matrix = rng.integers(0, n, size=(b, n))
    redraw_budget = 10 * b
    stats = np.empty(b, dtype=float)
    for i in range(b):
        indices = index_matrix[i]
        while True:
            try:
                stats[i] = metric_function(residuals.resample(indices))
                break
            except MetricError:
                if redraw_budget == 0:
                    raise
                redraw_budget -= 1
                redraw_rng = np.random.default_rng(
                    np.random.SeedSequence(entropy=seed, spawn_key=(i, 10 * b - redraw_budget))
                )
                indices = redraw_rng.integers(0, n, size=n)

    alpha = 1.0 - confidence_level
    ci_low, ci_high = np.quantile(stats, [alpha / 2.0, 1.0 - alpha / 2.0])
    return MetricResult(
        name=name,
        value=value,
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        confidence_level=confidence_level,
        n=n,
        bootstrap_b=b,
        seed=seed,
    )


def bootstrap_cohens_d(
    residuals_a: ResidualSet,
    residuals_b: ResidualSet,
    b: int = 1000,
    confidence_level: float = 0.95,
    seed: int = 0,
) -> MetricResult:
    """Percentile bootstrap CI for Cohen's d between two paired residual sets.

    Entries are matched by case id and resampled jointly, preserving the
    pairing induced by evaluating both predictors on identical folds.
    """
    if b < 100:
        raise MetricError("bootstrap requires b >= 100")
    by_id = {e.case_id: e for e in residuals_b.entries}
    if set(by_id) != {e.case_id for e in residuals_a.entries}:
        raise MetricError("paired bootstrap requires matching case ids")
    a_entries = residuals_a.entries
    b_entries = tuple(by_id[e.case_id] for e in a_entries)
    n = len(a_entries)
    value = cohens_d(residuals_a, residuals_b)

    rng = np.random.default_rng(seed)
    index_matrix = rng.integers(0, n, size=(b, n))
    stats = np.empty(b, dtype=float)
    for i in range(b):
        idx = index_matrix[i]
        stats[i] = cohens_d(
            residuals_a.resample(idx),
            _resample_entries(residuals_b, b_entries, idx),
        )
    alpha = 1.0 - confidence_level
    ci_low, ci_high = np.quantile(stats, [alpha / 2.0, 1.0 - alpha / 2.0])
    return MetricResult(
        name="cohens_d",
        value=value,
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        confidence_level=confidence_level,
        n=n,
        bootstrap_b=b,
        seed=seed,
    )


def _resample_entries(
    template: ResidualSet, entries: tuple[ResidualEntry, ...], indices: Iterable[int]
) -> ResidualSet:
    return _unchecked_set(
        tuple(entries[i] for i in indices),
        template.predictor_label,
        template.dataset_label,
    )


def _unchecked_set(
    entries: tuple[ResidualEntry, ...], predictor_label: str, dataset_label: str
) -> ResidualSet:
    # Bootstrap resamples repeat case ids by design; skip the uniqueness check.
    rs = object.__new__(ResidualSet)
    object.__setattr__(rs, "entries", entries)
    object.__setattr__(rs, "predictor_label", predictor_label)
    object.__setattr__(rs, "dataset_label", dataset_label)
    return rs


def _median(values: Sequence[float]) -> float:
    if not values:
        raise MetricError("cannot take the median of nothing")
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0
