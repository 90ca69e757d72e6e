"""Ordinary least squares with forward stepwise selection, the benchmark
predictor against which analogy-based estimates are compared.

Selection is forward with a backward check: the candidate with the smallest
partial-F p-value enters while below ``alpha_enter``, then any selected
feature whose p-value has drifted above ``alpha_remove`` leaves. Requiring
``alpha_enter <= alpha_remove`` prevents enter/remove cycling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .dataset import ProjectCase

TRANSFORMS = ("none", "log-log")

#: Predictions are floored here: a negative or zero effort is meaningless.
EFFORT_FLOOR = 1e-9

#: Residual sums below this fraction of total variance are treated as a
#: perfect fit when computing partial-F statistics.
_PERFECT_FIT_RTOL = 1e-14


class RegressionError(ValueError):
    """Raised for singular designs, insufficient data, or bad transforms."""


@dataclass(frozen=True)
class FitStats:
    r_squared: float
    n: int
    residual_std: float
    n_dropped_missing: int
    intercept_only: bool = False


@dataclass(frozen=True)
class RegressionModel:
    intercept: float
    coefficients: Mapping[str, float]
    selected_features: tuple[str, ...]
    transform: str
    fit_stats: FitStats

    def __post_init__(self) -> None:
        if set(self.coefficients) != set(self.selected_features):
            raise RegressionError("coefficients must be keyed exactly by selected features")


def _design(
    cases: Sequence[ProjectCase],
    features: Sequence[str],
    transform: str,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Rows × (intercept + features) design and target, listwise deletion."""
    if transform not in TRANSFORMS:
        raise RegressionError(f"unknown transform {transform!r}")
    kept_rows = []
    targets = []
    dropped = 0
    for case in cases:
        row = [case.values.get(f) for f in features]
        if any(v is None for v in row):
            dropped += 1
            continue
        if any(isinstance(v, str) for v in row):
            raise RegressionError("regression features must be numeric")
        kept_rows.append([float(v) for v in row])  # type: ignore[arg-type]
        targets.append(case.effort)
    if not kept_rows:
        raise RegressionError("no complete rows after dropping missing values")
    X = np.asarray(kept_rows, dtype=float)
    y = np.asarray(targets, dtype=float)
    if transform == "log-log":
        if np.any(X <= 0):
            raise RegressionError("log-log transform requires strictly positive feature values")
        X = np.log(X)
        y = np.log(y)
    return X, y, dropped


def _solve(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Least squares via SVD; raises on rank deficiency. Returns (beta, rss)."""
    n, p = X.shape
    design = np.hstack([np.ones((n, 1)), X])
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise RegressionError("design matrix is rank deficient")
    resid = y - design @ beta
    return beta, float(resid @ resid)


def ols_fit(
    cases: Sequence[ProjectCase],
    features: Sequence[str],
    transform: str = "none",
) -> RegressionModel:
    """Fit ordinary least squares on the given features.

    With ``log-log`` the model is linear in log space; predictions are
    exponentiated back to effort units.
    """
    features = list(features)
    X, y, dropped = _design(cases, features, transform)
    n = len(y)
    if n <= len(features) + 1:
        raise RegressionError(
            f"need more than {len(features) + 1} complete cases, have {n}"
        )
    beta, rss = _solve(X, y)
    tss = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if tss <= 0 else min(1.0, max(0.0, 1.0 - rss / tss))
    df = n - len(features) - 1
    stats_ = FitStats(
        r_squared=r_squared,
        n=n,
        residual_std=math.sqrt(rss / df) if df > 0 else 0.0,
        n_dropped_missing=dropped,
    )
    return RegressionModel(
        intercept=float(beta[0]),
        coefficients={f: float(b) for f, b in zip(features, beta[1:])},
        selected_features=tuple(features),
        transform=transform,
        fit_stats=stats_,
    )


def _partial_f_pvalue(rss_reduced: float, rss_full: float, df2: int, tss: float) -> float:
    """p-value for adding one parameter, from F(1, df2).

    Guarded so that an already (numerically) perfect reduced model admits
    nothing, while a genuinely explanatory addition to a perfect full model
    gets p = 0.
    """
    if df2 <= 0:
        return 1.0
    floor = _PERFECT_FIT_RTOL * max(tss, 1.0)
    improvement = rss_reduced - rss_full
    if improvement <= floor:
        return 1.0
    if rss_full <= floor:
        return 0.0
    f_stat = improvement / (rss_full / df2)
    return float(stats.f.sf(f_stat, 1, df2))


def stepwise_fit(
    cases: Sequence[ProjectCase],
    candidate_features: Sequence[str],
    alpha_enter: float = 0.05,
    alpha_remove: float = 0.10,
    transform: str = "none",
) -> RegressionModel:
    """Forward stepwise selection with a backward check.

    Ties on entry p-value break toward the earlier candidate in the given
    order. If nothing passes entry the result is an intercept-only model
    (the mean predictor), flagged via ``fit_stats.intercept_only``.
    """
    candidates = list(candidate_features)
    if not candidates:
        raise RegressionError("at least one candidate feature is required")
    if alpha_enter > alpha_remove:
        raise RegressionError("alpha_enter must be <= alpha_remove to prevent cycling")

    # One listwise deletion over all candidates keeps p-values comparable
    # across steps.
    X_all, y, dropped = _design(cases, candidates, transform)
    n = len(y)
    if n <= 2:
        raise RegressionError(f"need more than 2 complete cases, have {n}")
    tss = float(np.sum((y - y.mean()) ** 2))

    def rss_for(cols: Sequence[int]) -> float | None:
        if not cols:
            return tss
        if n <= len(cols) + 1:
            return None
        try:
            _, rss = _solve(X_all[:, list(cols)], y)
        except RegressionError:
            return None
        return rss

    selected: list[int] = []
    current_rss = tss
    for _ in range(4 * len(candidates) + 4):
        changed = False
        # Forward: best admissible candidate enters.
        best_idx, best_p, best_rss = None, 1.0, None
        for idx in range(len(candidates)):
            if idx in selected:
                continue
            rss = rss_for(selected + [idx])
            if rss is None:
                continue
            p = _partial_f_pvalue(current_rss, rss, n - len(selected) - 2, tss)
            if p < best_p:
                best_idx, best_p, best_rss = idx, p, rss
        if best_idx is not None and best_p < alpha_enter:
            selected.append(best_idx)
            current_rss = best_rss  # type: ignore[assignment]
            changed = True
        # Backward: weakest included feature leaves if no longer significant.
        if selected:
            worst_idx, worst_p = None, 0.0
            for idx in selected:
                remaining = [i for i in selected if i != idx]
                rss = rss_for(remaining)
                if rss is None:
                    continue
                p = _partial_f_pvalue(rss, current_rss, n - len(selected) - 1, tss)
                if p >= worst_p:
                    worst_idx, worst_p = idx, p
            if worst_idx is not None and worst_p > alpha_remove:
                selected.remove(worst_idx)
                rss = rss_for(selected)
                current_rss = tss if rss is None else rss
                changed = True
        if not changed:
            break

    if not selected:
        mean_y = float(np.mean(y))
        stats_ = FitStats(
            r_squared=0.0,
            n=n,
            residual_std=math.sqrt(tss / (n - 1)) if n > 1 else 0.0,
            n_dropped_missing=dropped,
            intercept_only=True,
        )
        return RegressionModel(
            intercept=mean_y,
            coefficients={},
            selected_features=(),
            transform=transform,
            fit_stats=stats_,
        )

    chosen = [candidates[i] for i in sorted(selected)]
    model = ols_fit(cases, chosen, transform)
    return RegressionModel(
        intercept=model.intercept,
        coefficients=model.coefficients,
        selected_features=model.selected_features,
        transform=model.transform,
        fit_stats=FitStats(
            r_squared=model.fit_stats.r_squared,
            n=model.fit_stats.n,
            residual_std=model.fit_stats.residual_std,
            n_dropped_missing=dropped,
        ),
    )


def regression_predict_raw(model: RegressionModel, target_values: Mapping[str, object]) -> float:
    """Unfloored prediction; used to detect when flooring kicked in."""
    terms = []
    for feature in model.selected_features:
        value = target_values.get(feature)
        if value is None or isinstance(value, str):
            raise RegressionError(f"target is missing selected feature {feature!r}")
        terms.append(float(value))
    if model.transform == "log-log":
        if any(v <= 0 for v in terms):
            raise RegressionError("log-log prediction requires positive feature values")
        linear = model.intercept + sum(
            model.coefficients[f] * math.log(v)
            for f, v in zip(model.selected_features, terms)
        )
        return math.exp(linear)
    return model.intercept + sum(
        model.coefficients[f] * v for f, v in zip(model.selected_features, terms)
    )


def regression_predict(model: RegressionModel, target_values: Mapping[str, object]) -> float:
    """Point prediction in effort units, floored at a small positive value."""
    return max(regression_predict_raw(model, target_values), EFFORT_FLOOR)
