"""Experiment orchestration: leave-one-out evaluation, wrapper feature
subset search, training-set-size sensitivity curves, and vote-count
comparison summaries.

Everything here is a pure function of (dataset, configuration, seed).
LOOCV is the only outer protocol: it is deterministic, so results never
depend on how folds happened to be drawn. Fold training state (ranges,
coefficients, per-fold subsets) is recorded so tests can audit that the
held-out case never influences its own prediction.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import clone

from .dataset import Dataset
from .estimators import AnalogyEstimator, EffortEstimatorMixin
from .metrics import (
    MetricError,
    ResidualEntry,
    ResidualSet,
    mar,
    mdmre,
    mmre,
    pred,
    standardised_accuracy,
)

EXHAUSTIVE_SEARCH_LIMIT = 16

_LOWER_BETTER = {"mmre", "mdmre", "mar"}
_HIGHER_BETTER = {"pred", "sa"}


class HarnessError(ValueError):
    """Raised for invalid experiment setups."""


# -- metric plumbing ------------------------------------------------------


@dataclass(frozen=True)
class MetricSpec:
    """A named accuracy metric plus its parameters."""

    name: str
    threshold: float | None = None

    def __post_init__(self) -> None:
        if self.name not in _LOWER_BETTER | _HIGHER_BETTER:
            raise HarnessError(f"unknown metric {self.name!r}")
        if self.name == "pred" and self.threshold is None:
            object.__setattr__(self, "threshold", 25.0)

    @property
    def label(self) -> str:
        if self.name == "pred":
            threshold = self.threshold if self.threshold is not None else 25.0
            return f"pred{format(threshold, 'g')}"
        return self.name

    @property
    def direction(self) -> str:
        return "lower" if self.name in _LOWER_BETTER else "higher"

    def evaluate(self, residuals: ResidualSet, dataset: Dataset | None = None) -> float:
        if self.name == "mmre":
            return mmre(residuals)
        if self.name == "mdmre":
            return mdmre(residuals)
        if self.name == "mar":
            return mar(residuals)
        if self.name == "pred":
            return pred(residuals, self.threshold or 25.0)
        if self.name == "sa":
            if dataset is None:
                raise HarnessError("standardised accuracy needs the dataset's efforts")
            return standardised_accuracy(residuals, dataset)
        raise HarnessError(f"unknown metric {self.name!r}")


def metric_direction(label: str) -> str:
    """Better-direction for a metric label such as ``mmre`` or ``pred25``."""
    base = label.rstrip("0123456789.")
    if base in _LOWER_BETTER:
        return "lower"
    if base in _HIGHER_BETTER:
        return "higher"
    raise HarnessError(f"unknown metric direction for {label!r}")


DEFAULT_METRICS = (MetricSpec("mmre"), MetricSpec("mdmre"), MetricSpec("pred"), MetricSpec("mar"), MetricSpec("sa"))


# -- leave-one-out evaluation ---------------------------------------------


@dataclass(frozen=True)
class SubsetSearchSpec:
    mode: str = "exhaustive"
    nesting: str = "per-fold"
    objective: MetricSpec = field(default_factory=lambda: MetricSpec("mmre"))

    def __post_init__(self) -> None:
        if self.mode not in ("exhaustive", "forward"):
            raise HarnessError(f"unknown subset-search mode {self.mode!r}")
        if self.nesting not in ("per-fold", "global"):
            raise HarnessError(f"unknown subset-search nesting {self.nesting!r}")


@dataclass(frozen=True)
class FoldRecord:
    held_out_id: str
    predicted: float
    fallback: bool
    artifacts: Mapping[str, object]


@dataclass(frozen=True)
class LoocvRun:
    residuals: ResidualSet
    folds: tuple[FoldRecord, ...]
    fallback_count: int
    peeking_prone: bool = False

    @property
    def fallback_ids(self) -> tuple[str, ...]:
        return tuple(f.held_out_id for f in self.folds if f.fallback)


def _fit_and_predict_fold(
    dataset: Dataset,
    estimator: EffortEstimatorMixin,
    held_index: int,
    search: SubsetSearchSpec | None,
    seed: int,
) -> FoldRecord:
    held = dataset.cases[held_index]
    train_ids = [c.id for c in dataset.cases if c.id != held.id]
    est = clone(estimator)
    chosen_subset = None
    if search is not None and search.nesting == "per-fold" and isinstance(est, AnalogyEstimator):
        inner = dataset.subset(train_ids)
        result = subset_search(
            inner, est, mode=search.mode, objective=search.objective, seed=seed
        )
        chosen_subset = result.subset
        est.set_params(feature_subset=chosen_subset)
    target_values = dataset.predictor_values(held)
    fallback = False
    try:
        est.fit(dataset, train_ids)
        predicted = est.predict_case(target_values)
        artifacts = dict(est.training_artifacts())
    except Exception:
        # Keep n constant across predictors: a failed fold degrades to the
        # mean of its training efforts rather than disappearing.
        train_mean = sum(dataset.case(cid).effort for cid in train_ids) / len(train_ids)
        predicted = train_mean
        artifacts = {"kind": "fallback-mean", "mean_effort": train_mean}
        fallback = True
    if chosen_subset is not None:
        artifacts["searched_subset"] = chosen_subset
    return FoldRecord(
        held_out_id=held.id, predicted=predicted, fallback=fallback, artifacts=artifacts
    )


def run_loocv(
    dataset: Dataset,
    estimator: EffortEstimatorMixin,
    *,
    seed: int,
    subset_search_spec: SubsetSearchSpec | None = None,
    predictor_label: str = "",
    threads: int = 1,
) -> LoocvRun:
    """Leave-one-out evaluation of an (unfitted) estimator.

    Each case is held out in turn while a clone of the estimator is fitted
    to the remaining cases; every fold-training quantity, including
    normalization ranges and (in per-fold nesting) the searched feature
    subset, is computed without the held-out case. Results are keyed by
    fold, so thread count never changes the output.
    """
    if dataset.n < 3:
        raise HarnessError("leave-one-out needs at least 3 cases")
    estimator_for_folds = estimator
    peeking_prone = False
    if (
        subset_search_spec is not None
        and subset_search_spec.nesting == "global"
        and isinstance(estimator, AnalogyEstimator)
    ):
        result = subset_search(
            dataset,
            estimator,
            mode=subset_search_spec.mode,
            objective=subset_search_spec.objective,
            seed=seed,
        )
        estimator_for_folds = clone(estimator)
        estimator_for_folds.set_params(feature_subset=result.subset)
        subset_search_spec = None
        peeking_prone = True

    indices = range(dataset.n)
    if threads == 1:
        folds = [
            _fit_and_predict_fold(dataset, estimator_for_folds, i, subset_search_spec, seed)
            for i in indices
        ]
    else:
        workers = threads if threads > 1 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            folds = list(
                pool.map(
                    lambda i: _fit_and_predict_fold(
                        dataset, estimator_for_folds, i, subset_search_spec, seed
                    ),
                    indices,
                )
            )

    entries = tuple(
        ResidualEntry(case_id=f.held_out_id, actual=dataset.case(f.held_out_id).effort, predicted=f.predicted)
        for f in folds
    )
    residuals = ResidualSet(
        entries=entries,
        predictor_label=predictor_label or type(estimator).__name__,
        dataset_label=dataset.label,
    )
    return LoocvRun(
        residuals=residuals,
        folds=tuple(folds),
        fallback_count=sum(1 for f in folds if f.fallback),
        peeking_prone=peeking_prone,
    )


# -- wrapper feature subset search ----------------------------------------


@dataclass(frozen=True)
class SubsetSearchResult:
    subset: tuple[str, ...]
    objective_value: float
    trace: tuple[tuple[tuple[str, ...], float], ...]


def _subset_objective(
    dataset: Dataset,
    base_estimator: AnalogyEstimator,
    subset: Sequence[str],
    objective: MetricSpec,
    seed: int,
) -> float:
    est = clone(base_estimator)
    est.set_params(feature_subset=tuple(subset))
    run = run_loocv(dataset, est, seed=seed)
    value = objective.evaluate(run.residuals, dataset)
    return value if objective.direction == "lower" else -value


def subset_search(
    dataset: Dataset,
    base_estimator: AnalogyEstimator,
    *,
    mode: str = "exhaustive",
    objective: MetricSpec | None = None,
    seed: int = 0,
) -> SubsetSearchResult:
    """Search predictor subsets by inner leave-one-out performance.

    Exhaustive mode scores every non-empty subset (capped at 16 features)
    and returns the best; ties prefer fewer features, then earlier schema
    order. Forward mode greedily adds one feature while the objective
    strictly improves.
    """
    objective = objective or MetricSpec("mmre")
    pool = list(
        base_estimator.feature_subset
        or [f.name for f in dataset.active_predictors()]
    )
    if not pool:
        raise HarnessError("no candidate features to search over")

    def score(subset: Sequence[str]) -> float:
        return _subset_objective(dataset, base_estimator, subset, objective, seed)

    trace: list[tuple[tuple[str, ...], float]] = []
    if mode == "exhaustive":
        if len(pool) > EXHAUSTIVE_SEARCH_LIMIT:
            raise HarnessError(
                f"exhaustive search supports at most {EXHAUSTIVE_SEARCH_LIMIT} "
                f"features, got {len(pool)}"
            )
        best: tuple[float, int, tuple[int, ...]] | None = None
        best_subset: tuple[str, ...] = ()
        for r in range(1, len(pool) + 1):
            for combo in itertools.combinations(range(len(pool)), r):
                subset = tuple(pool[i] for i in combo)
                value = score(subset)
                trace.append((subset, value))
                key = (value, len(combo), combo)
                if best is None or key < best:
                    best = key
                    best_subset = subset
        assert best is not None
        return SubsetSearchResult(
            subset=best_subset, objective_value=best[0], trace=tuple(trace)
        )

    if mode == "forward":
        selected: list[str] = []
        current = float("inf")
        while len(selected) < len(pool):
            best_feature = None
            best_value = current
            for feature in pool:
                if feature in selected:
                    continue
                subset = tuple(selected + [feature])
                value = score(subset)
                trace.append((subset, value))
                if value < best_value:
                    best_feature, best_value = feature, value
            if best_feature is None:
                break
            selected.append(best_feature)
            current = best_value
        if not selected:
            # Nothing improved on the empty start; fall back to the single
            # best feature so the result is always a usable subset.
            ranked = sorted(trace, key=lambda t: (t[1], len(t[0])))
            return SubsetSearchResult(
                subset=ranked[0][0], objective_value=ranked[0][1], trace=tuple(trace)
            )
        ordered = tuple(f for f in pool if f in selected)
        return SubsetSearchResult(
            subset=ordered, objective_value=current, trace=tuple(trace)
        )

    raise HarnessError(f"unknown subset-search mode {mode!r}")


# -- training-set-size sensitivity ----------------------------------------


@dataclass(frozen=True)
class SensitivityPoint:
    size: int
    repeat: int
    values: Mapping[str, float | None]
    flagged: bool
    n_test: int


@dataclass(frozen=True)
class SensitivitySpread:
    size: int
    metric: str
    minimum: float
    median: float
    maximum: float


@dataclass(frozen=True)
class SensitivityCurve:
    points: tuple[SensitivityPoint, ...]
    spreads: tuple[SensitivitySpread, ...]

    def median_value(self, size: int, metric: str) -> float:
        for row in self.spreads:
            if row.size == size and row.metric == metric:
                return row.median
        raise HarnessError(f"no spread row for size={size} metric={metric!r}")


def sensitivity_curve(
    dataset: Dataset,
    estimator: EffortEstimatorMixin,
    sizes: Sequence[int],
    repeats: int,
    *,
    seed: int,
    metrics: Sequence[MetricSpec] = (MetricSpec("mmre"),),
    order_feature: str | None = None,
) -> SensitivityCurve:
    """Simulate case-base growth: train on a prefix, predict the rest.

    Case order is randomized per repeat from the seed; when
    ``order_feature`` names a numeric feature (e.g. a completion date
    surrogate) ordering is chronological on it instead and repeats differ
    only through tie handling. Sizes too small to fit the estimator yield
    flagged rows rather than silently disappearing.
    """
    if list(sizes) != sorted(set(sizes)):
        raise HarnessError("sizes must be strictly ascending")
    if sizes[-1] > dataset.n - 1:
        raise HarnessError("largest size must leave at least one test case")
    if repeats < 1:
        raise HarnessError("repeats must be >= 1")

    streams = np.random.SeedSequence(seed).spawn(repeats)
    points: list[SensitivityPoint] = []
    for repeat_index in range(repeats):
        if order_feature is not None:
            keyed = [
                (c.values.get(order_feature), i)
                for i, c in enumerate(dataset.cases)
            ]
            order = [i for _, i in sorted(keyed, key=lambda t: (t[0] is None, t[0], t[1]))]
        else:
            rng = np.random.default_rng(streams[repeat_index])
            order = list(rng.permutation(dataset.n))
        ordered_ids = [dataset.cases[i].id for i in order]
        for size in sizes:
            train_ids = ordered_ids[:size]
            test_ids = ordered_ids[size:]
            est = clone(estimator)
            try:
                est.fit(dataset, train_ids)
            except Exception:
                points.append(
                    SensitivityPoint(
                        size=size,
                        repeat=repeat_index,
                        values={m.label: None for m in metrics},
                        flagged=True,
                        n_test=len(test_ids),
                    )
                )
                continue
            train_mean = sum(dataset.case(cid).effort for cid in train_ids) / size
            entries = []
            flagged = False
            failures = 0
            for cid in test_ids:
                case = dataset.case(cid)
                try:
                    predicted = est.predict_case(dataset.predictor_values(case))
                except Exception:
                    predicted = train_mean
                    failures += 1
                    flagged = True
                entries.append(
                    ResidualEntry(case_id=cid, actual=case.effort, predicted=predicted)
                )
            if failures == len(test_ids):
                # The predictor produced nothing at this size (e.g. k larger
                # than the training prefix); keep the row, but without values.
                points.append(
                    SensitivityPoint(
                        size=size,
                        repeat=repeat_index,
                        values={m.label: None for m in metrics},
                        flagged=True,
                        n_test=len(test_ids),
                    )
                )
                continue
            residuals = ResidualSet(entries=tuple(entries), dataset_label=dataset.label)
            values: dict[str, float | None] = {}
            for metric in metrics:
                try:
                    values[metric.label] = metric.evaluate(residuals, dataset)
                except MetricError:
                    values[metric.label] = None
                    flagged = True
            points.append(
                SensitivityPoint(
                    size=size,
                    repeat=repeat_index,
                    values=values,
                    flagged=flagged,
                    n_test=len(test_ids),
                )
            )

    spreads = []
    for size in sizes:
        for metric in metrics:
            observed = [
                p.values[metric.label]
                for p in points
                if p.size == size and p.values.get(metric.label) is not None
            ]
            if not observed:
                continue
            ordered = sorted(observed)  # type: ignore[type-var]
            mid = len(ordered) // 2
            median = (
                ordered[mid]
                if len(ordered) % 2 == 1
                else (ordered[mid - 1] + ordered[mid]) / 2.0
            )
            spreads.append(
                SensitivitySpread(
                    size=size,
                    metric=metric.label,
                    minimum=ordered[0],
                    median=median,
                    maximum=ordered[-1],
                )
            )
    return SensitivityCurve(points=tuple(points), spreads=tuple(spreads))


# -- vote counting ---------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRecord:
    dataset_label: str
    predictor_a: str
    predictor_b: str
    metric: str
    value_a: float
    value_b: float
    verdict: str | None = None
    effect_size: float | None = None


@dataclass(frozen=True)
class VoteCountRow:
    predictor_a: str
    predictor_b: str
    a_better: int
    b_better: int
    inconclusive: int


def classify_comparison(record: ComparisonRecord, epsilon_percent: float) -> str:
    """Assign a-better / b-better / inconclusive with a relative margin.

    A side wins when it beats the other by more than ``epsilon_percent``
    of the other side's value, in the metric's better-direction; with the
    default epsilon of 0 any strict improvement wins and exact ties are
    inconclusive.
    """
    if epsilon_percent < 0:
        raise HarnessError("epsilon must be >= 0")
    direction = metric_direction(record.metric)
    margin = epsilon_percent / 100.0
    a, b = record.value_a, record.value_b
    if direction == "lower":
        if (b - a) > margin * abs(b):
            return "a-better"
        if (a - b) > margin * abs(a):
            return "b-better"
    else:
        if (a - b) > margin * abs(b):
            return "a-better"
        if (b - a) > margin * abs(a):
            return "b-better"
    return "inconclusive"


def vote_count(
    records: Sequence[ComparisonRecord], epsilon_percent: float = 0.0
) -> tuple[tuple[ComparisonRecord, ...], tuple[VoteCountRow, ...]]:
    """Tally per-record verdicts into (a-better, b-better, inconclusive)
    counts per predictor pair."""
    if not records:
        raise HarnessError("no comparison records to count")
    classified = tuple(
        replace(r, verdict=classify_comparison(r, epsilon_percent)) for r in records
    )
    counts: dict[tuple[str, str], list[int]] = {}
    for record in classified:
        key = (record.predictor_a, record.predictor_b)
        bucket = counts.setdefault(key, [0, 0, 0])
        bucket[("a-better", "b-better", "inconclusive").index(record.verdict)] += 1
    rows = tuple(
        VoteCountRow(
            predictor_a=key[0],
            predictor_b=key[1],
            a_better=c[0],
            b_better=c[1],
            inconclusive=c[2],
        )
        for key, c in counts.items()
    )
    return classified, rows
