"""Case-based effort prediction: retrieve the nearest completed projects and
pool their known efforts.

Distance is Euclidean over min-max normalized features, so every feature
spans [0, 1] on the training base. Categorical features contribute a 0/1
overlap term; a feature missing on exactly one side contributes the maximal
gap of 1, and a feature missing on both sides is dropped from the sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .dataset import ProjectCase

POOLING_RULES = ("nearest", "mean", "inverse-distance-weighted-mean", "median")
ADAPTATION_MODES = ("none", "linear-size")

#: Softening constant for inverse-distance weights; gives exact-match donors
#: finite, dominant weight.
IDW_EPSILON = 1e-9

Value = float | str | None
Ranges = Mapping[str, tuple[float, float]]


class AnalogyError(ValueError):
    """Raised for invalid similarity configurations or retrieval requests."""


@dataclass(frozen=True)
class SimilarityConfig:
    """Everything that parameterizes retrieval and pooling."""

    feature_subset: tuple[str, ...]
    k: int = 3
    pooling: str = "mean"
    adaptation: str = "none"
    feature_weights: Mapping[str, float] = field(default_factory=dict)
    categorical_rule: str = "overlap"

    def __post_init__(self) -> None:
        if not self.feature_subset:
            raise AnalogyError("feature subset must be non-empty")
        if len(set(self.feature_subset)) != len(self.feature_subset):
            raise AnalogyError("feature subset contains duplicates")
        if self.k < 1:
            raise AnalogyError("k must be >= 1")
        if self.pooling not in POOLING_RULES:
            raise AnalogyError(f"unknown pooling rule {self.pooling!r}")
        if self.adaptation not in ADAPTATION_MODES:
            raise AnalogyError(f"unknown adaptation mode {self.adaptation!r}")
        if self.categorical_rule != "overlap":
            raise AnalogyError(f"unknown categorical rule {self.categorical_rule!r}")
        weights = dict(self.feature_weights)
        unknown = set(weights) - set(self.feature_subset)
        if unknown:
            raise AnalogyError(f"weights for features outside subset: {sorted(unknown)}")
        if any(w < 0 for w in weights.values()):
            raise AnalogyError("feature weights must be non-negative")
        if all(self.weight(f) == 0 for f in self.feature_subset):
            raise AnalogyError("at least one feature weight must be positive")

    def weight(self, feature: str) -> float:
        return float(self.feature_weights.get(feature, 1.0))

    def effective_features(self) -> tuple[str, ...]:
        """Subset minus zero-weight features (weight 0 excludes a feature)."""
        return tuple(f for f in self.feature_subset if self.weight(f) > 0)


@dataclass(frozen=True)
class Donor:
    """One retrieved analogy, ranked by closeness to the target."""

    case_id: str
    distance: float
    effort: float
    rank: int
    adapted_effort: float

    @property
    def was_adapted(self) -> bool:
        return self.adapted_effort != self.effort


@dataclass(frozen=True)
class Prediction:
    """Point estimate plus the donor list it was pooled from.

    The estimate is recomputable from ``donors`` and ``config`` alone:
    pooling applies to each donor's ``adapted_effort``.
    """

    estimate: float
    donors: tuple[Donor, ...]
    config: SimilarityConfig
    adapted: bool
    warnings: tuple[str, ...] = ()


def normalize(value: float, feature_min: float, feature_max: float) -> float:
    """Min-max rescale into [0, 1], clamping out-of-range values.

    A degenerate range (min == max) maps everything to 0: a constant
    feature carries no similarity information.
    """
    if feature_min > feature_max:
        raise AnalogyError("feature range has min > max")
    if feature_min == feature_max:
        return 0.0
    scaled = (value - feature_min) / (feature_max - feature_min)
    return min(1.0, max(0.0, scaled))


def feature_gaps(
    target_values: Mapping[str, Value],
    case_values: Mapping[str, Value],
    config: SimilarityConfig,
    ranges: Ranges,
) -> dict[str, float | None]:
    """Per-feature normalized gap in [0, 1]; ``None`` where both sides are missing."""
    gaps: dict[str, float | None] = {}
    for name in config.effective_features():
        t = target_values.get(name)
        c = case_values.get(name)
        if t is None and c is None:
            gaps[name] = None
        elif t is None or c is None:
            gaps[name] = 1.0
        elif isinstance(t, str) or isinstance(c, str):
            gaps[name] = 0.0 if t == c else 1.0
        else:
            span = ranges.get(name)
            if span is None:
                # Feature had no usable training values; uninformative.
                gaps[name] = 0.0
            else:
                gaps[name] = abs(normalize(t, *span) - normalize(c, *span))
    return gaps


def case_distance(
    target_values: Mapping[str, Value],
    case_values: Mapping[str, Value],
    config: SimilarityConfig,
    ranges: Ranges,
) -> float:
    """Weighted normalized Euclidean distance, in [0, 1] for equal weights.

    Computes sqrt(sum(w_f * gap_f^2) / sum(w_f)) over the effective feature
    subset, where features missing on both sides leave both sums.
    """
    total = 0.0
    weight_sum = 0.0
    for name, gap in feature_gaps(target_values, case_values, config, ranges).items():
        if gap is None:
            continue
        w = config.weight(name)
        total += w * gap * gap
        weight_sum += w
    if weight_sum == 0.0:
        raise AnalogyError("no usable features: every subset feature was skipped")
    return math.sqrt(total / weight_sum)


def retrieve(
    target_values: Mapping[str, Value],
    case_base: Sequence[ProjectCase],
    config: SimilarityConfig,
    ranges: Ranges,
    case_values: Mapping[str, Mapping[str, Value]] | None = None,
) -> tuple[Donor, ...]:
    """The k nearest cases, ranked by ascending (distance, case id).

    ``case_values`` optionally supplies the predictor-facing value maps;
    by default each case's raw value map is used. The target must already
    be excluded from ``case_base``.
    """
    if len(case_base) < config.k:
        raise AnalogyError(
            f"case base has {len(case_base)} cases, fewer than k={config.k}"
        )
    scored = []
    for case in case_base:
        values = case.values if case_values is None else case_values[case.id]
        dist = case_distance(target_values, values, config, ranges)
        scored.append((dist, case.id, case.effort))
    scored.sort(key=lambda t: (t[0], t[1]))
    return tuple(
        Donor(case_id=cid, distance=dist, effort=effort, rank=rank, adapted_effort=effort)
        for rank, (dist, cid, effort) in enumerate(scored[: config.k], start=1)
    )


def pool(donors: Sequence[Donor], pooling: str) -> float:
    """Combine donor efforts into one estimate.

    Pooling always applies to ``adapted_effort`` (equal to the raw effort
    when no adaptation ran), so the result is recomputable from the donors.
    """
    if not donors:
        raise AnalogyError("cannot pool an empty donor list")
    efforts = [d.adapted_effort for d in donors]
    if pooling == "nearest":
        return min(donors, key=lambda d: d.rank).adapted_effort
    if pooling == "mean":
        return sum(efforts) / len(efforts)
    if pooling == "inverse-distance-weighted-mean":
        weights = [1.0 / (d.distance + IDW_EPSILON) for d in donors]
        return sum(w * e for w, e in zip(weights, efforts)) / sum(weights)
    if pooling == "median":
        ordered = sorted(efforts)
        mid = len(ordered) // 2
        if len(ordered) % 2 == 1:
            return ordered[mid]
        return (ordered[mid - 1] + ordered[mid]) / 2.0
    raise AnalogyError(f"unknown pooling rule {pooling!r}")


def adapt_linear(
    donor: Donor,
    target_values: Mapping[str, Value],
    donor_values: Mapping[str, Value],
    size_feature: str,
) -> tuple[Donor, str | None]:
    """Scale the donor's effort by target-size / donor-size.

    Falls back to the unadapted effort (and says why) when either side's
    size value is missing or non-positive.
    """
    target_size = target_values.get(size_feature)
    donor_size = donor_values.get(size_feature)
    for side, value in (("target", target_size), ("donor", donor_size)):
        if value is None or isinstance(value, str) or value <= 0:
            reason = (
                f"donor {donor.case_id}: no usable {side} value for "
                f"size driver {size_feature!r}, unadapted effort used"
            )
            return donor, reason
    scaled = donor.effort * (float(target_size) / float(donor_size))  # type: ignore[arg-type]
    return replace(donor, adapted_effort=scaled), None


def predict(
    target_values: Mapping[str, Value],
    case_base: Sequence[ProjectCase],
    config: SimilarityConfig,
    ranges: Ranges,
    size_feature: str | None = None,
    case_values: Mapping[str, Mapping[str, Value]] | None = None,
) -> Prediction:
    """Retrieve donors, optionally adapt their efforts, and pool."""
    warnings = list(_clamp_warnings(target_values, config, ranges))
    donors = retrieve(target_values, case_base, config, ranges, case_values)
    adapted = config.adaptation == "linear-size"
    if adapted:
        if size_feature is None:
            raise AnalogyError("linear-size adaptation requires a size-driver feature")
        values_by_id = (
            {c.id: c.values for c in case_base} if case_values is None else case_values
        )
        adjusted = []
        for donor in donors:
            donor, reason = adapt_linear(
                donor, target_values, values_by_id[donor.case_id], size_feature
            )
            if reason is not None:
                warnings.append(reason)
            adjusted.append(donor)
        donors = tuple(adjusted)
    estimate = pool(donors, config.pooling)
    return Prediction(
        estimate=estimate,
        donors=donors,
        config=config,
        adapted=adapted,
        warnings=tuple(warnings),
    )


def _clamp_warnings(
    target_values: Mapping[str, Value], config: SimilarityConfig, ranges: Ranges
) -> list[str]:
    notes = []
    for name in config.effective_features():
        value = target_values.get(name)
        span = ranges.get(name)
        if value is None or isinstance(value, str) or span is None:
            continue
        lo, hi = span
        if value < lo or value > hi:
            notes.append(
                f"target {name}={format(value, 'g')} outside training range "
                f"[{format(lo, 'g')}, {format(hi, 'g')}], clamped"
            )
    return notes
