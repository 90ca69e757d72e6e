import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analogest.analogy import (
    AnalogyError,
    Donor,
    SimilarityConfig,
    adapt_linear,
    case_distance,
    normalize,
    pool,
    predict,
    retrieve,
)
from analogest.dataset import ProjectCase


def cfg(features, **kw):
    return SimilarityConfig(feature_subset=tuple(features), **kw)


def case(cid, effort=100.0, **values):
    return ProjectCase(id=cid, values=values, effort=effort)


# -- normalize -------------------------------------------------------------


def test_normalize_formula():
    assert normalize(5, 2, 11) == pytest.approx(1 / 3, abs=0)
    assert normalize(2, 2, 11) == 0.0
    assert normalize(11, 2, 11) == 1.0


def test_normalize_clamps_out_of_range():
    # Unclamped, (20 - 2) / (11 - 2) = 2.0 would dominate the squared sum.
    assert (20 - 2) / (11 - 2) == 2.0
    assert normalize(20, 2, 11) == 1.0
    assert normalize(-4, 2, 11) == 0.0


def test_normalize_degenerate_range():
    assert normalize(7, 7, 7) == 0.0
    assert normalize(123, 7, 7) == 0.0


# -- case_distance ----------------------------------------------------------


RANGES = {"a": (0.0, 10.0), "b": (0.0, 10.0)}


def test_distance_identity():
    c = cfg(["a", "b"])
    assert case_distance({"a": 3.0, "b": 7.0}, {"a": 3.0, "b": 7.0}, c, RANGES) == 0.0


def test_distance_hand_value():
    # gaps 0 and 1, equal weights: sqrt((0 + 1) / 2)
    c = cfg(["a", "b"])
    d = case_distance({"a": 5.0, "b": 0.0}, {"a": 5.0, "b": 10.0}, c, RANGES)
    assert d == pytest.approx(math.sqrt(0.5), abs=1e-15)


def test_categorical_overlap():
    c = cfg(["domain"])
    assert case_distance({"domain": "telecom"}, {"domain": "banking"}, c, {}) == 1.0
    assert case_distance({"domain": "telecom"}, {"domain": "telecom"}, c, {}) == 0.0


def test_one_side_missing_is_maximal_gap():
    c = cfg(["a", "b"])
    d = case_distance({"a": 5.0, "b": None}, {"a": 5.0, "b": 10.0}, c, RANGES)
    assert d == pytest.approx(math.sqrt(0.5), abs=1e-15)


def test_both_missing_skips_feature():
    c = cfg(["a", "b"])
    d = case_distance({"a": 0.0, "b": None}, {"a": 10.0, "b": None}, c, RANGES)
    assert d == 1.0  # only feature a remains, gap 1


def test_all_skipped_is_error():
    c = cfg(["a"])
    with pytest.raises(AnalogyError, match="no usable features"):
        case_distance({"a": None}, {"a": None}, c, RANGES)


def test_weights_divide_by_sum():
    c_eq = cfg(["a", "b"])
    c_w = cfg(["a", "b"], feature_weights={"a": 2.0, "b": 2.0})
    t, o = {"a": 0.0, "b": 0.0}, {"a": 10.0, "b": 5.0}
    assert case_distance(t, o, c_eq, RANGES) == pytest.approx(
        case_distance(t, o, c_w, RANGES), abs=1e-15
    )


def test_zero_weight_excludes_feature():
    c = cfg(["a", "b"], feature_weights={"b": 0.0})
    d = case_distance({"a": 0.0, "b": 0.0}, {"a": 0.0, "b": 10.0}, c, RANGES)
    assert d == 0.0


values_strategy = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)


@given(
    t=st.tuples(values_strategy, values_strategy),
    c=st.tuples(values_strategy, values_strategy),
)
@settings(max_examples=100, deadline=None)
def test_distance_metric_properties(t, c):
    config = cfg(["a", "b"])
    tv = {"a": t[0], "b": t[1]}
    cv = {"a": c[0], "b": c[1]}
    d = case_distance(tv, cv, config, RANGES)
    assert 0.0 <= d <= 1.0
    assert case_distance(cv, tv, config, RANGES) == d
    assert case_distance(tv, tv, config, RANGES) == 0.0


@given(
    base_gap=st.floats(min_value=0.0, max_value=0.9, allow_nan=False),
    extra=st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
)
@settings(max_examples=60, deadline=None)
def test_distance_monotone_in_single_gap(base_gap, extra):
    config = cfg(["a", "b"])
    tv = {"a": 0.0, "b": 0.0}
    near = {"a": base_gap * 10.0, "b": 3.0}
    far = {"a": min(10.0, (base_gap + extra / 10.0) * 10.0), "b": 3.0}
    assert case_distance(tv, far, config, RANGES) >= case_distance(tv, near, config, RANGES)


# -- retrieve ----------------------------------------------------------------


def toy_base():
    return [
        case("B", effort=30.0, a=1.0),
        case("A", effort=10.0, a=1.0),
        case("C", effort=50.0, a=5.0),
        case("D", effort=90.0, a=9.0),
    ]


def test_retrieve_sorts_by_distance_then_id():
    config = cfg(["a"], k=2)
    ranges = {"a": (0.0, 10.0)}
    donors = retrieve({"a": 1.0}, toy_base(), config, ranges)
    assert [d.case_id for d in donors] == ["A", "B"]
    assert donors[0].rank == 1 and donors[1].rank == 2
    assert donors[0].distance == donors[1].distance == 0.0


def test_retrieve_k_equals_n():
    config = cfg(["a"], k=4)
    donors = retrieve({"a": 1.0}, toy_base(), config, {"a": (0.0, 10.0)})
    assert [d.case_id for d in donors] == ["A", "B", "C", "D"]
    assert [d.distance for d in donors] == sorted(d.distance for d in donors)


def test_retrieve_exact_duplicate():
    config = cfg(["a"], k=1)
    donors = retrieve({"a": 9.0}, toy_base(), config, {"a": (0.0, 10.0)})
    assert donors[0].case_id == "D"
    assert donors[0].distance == 0.0


def test_retrieve_small_base_rejected():
    config = cfg(["a"], k=5)
    with pytest.raises(AnalogyError, match="fewer than k"):
        retrieve({"a": 1.0}, toy_base(), config, {"a": (0.0, 10.0)})


@given(data=st.data())
@settings(max_examples=40, deadline=None)
def test_retrieve_matches_brute_force_oracle(data):
    n = data.draw(st.integers(min_value=2, max_value=50))
    k = data.draw(st.integers(min_value=1, max_value=n))
    base = []
    for i in range(n):
        base.append(
            case(
                f"c{i:02d}",
                effort=float(data.draw(st.integers(min_value=1, max_value=500))),
                a=float(data.draw(st.integers(min_value=0, max_value=20))),
                b=float(data.draw(st.integers(min_value=0, max_value=20))),
            )
        )
    config = cfg(["a", "b"], k=k)
    ranges = {"a": (0.0, 20.0), "b": (0.0, 20.0)}
    target = {"a": 10.0, "b": 10.0}

    donors = retrieve(target, base, config, ranges)

    # Exhaustive oracle: compute every distance, sort, take k. Gaps follow
    # the definition: normalize each side, then take the difference.
    def norm(v):
        return (v - 0.0) / (20.0 - 0.0)

    def oracle_distance(c):
        ga = abs(norm(10.0) - norm(c.values["a"]))
        gb = abs(norm(10.0) - norm(c.values["b"]))
        return math.sqrt((ga * ga + gb * gb) / 2.0)

    expected = sorted(((oracle_distance(c), c.id) for c in base))[:k]
    assert [(d.distance, d.case_id) for d in donors] == expected


def test_retrieve_permutation_invariant():
    import itertools

    config = cfg(["a"], k=2)
    ranges = {"a": (0.0, 10.0)}
    reference = retrieve({"a": 2.0}, toy_base(), config, ranges)
    for perm in itertools.permutations(toy_base()):
        assert retrieve({"a": 2.0}, list(perm), config, ranges) == reference


# -- pool --------------------------------------------------------------------


def donor(cid, distance, effort, rank):
    return Donor(case_id=cid, distance=distance, effort=effort, rank=rank, adapted_effort=effort)


def test_pool_single_donor_any_rule():
    donors = [donor("A", 0.1, 100.0, 1)]
    for rule in ("nearest", "mean", "inverse-distance-weighted-mean", "median"):
        assert pool(donors, rule) == 100.0


def test_pool_mean_and_median():
    donors = [donor("A", 0.0, 100.0, 1), donor("B", 0.1, 200.0, 2), donor("C", 0.2, 600.0, 3)]
    assert pool(donors, "mean") == 300.0
    assert pool(donors, "median") == 200.0
    assert pool(donors, "nearest") == 100.0


def test_pool_median_even_count():
    donors = [donor("A", 0.0, 100.0, 1), donor("B", 0.1, 300.0, 2)]
    assert pool(donors, "median") == 200.0


def test_pool_idw_zero_distance_dominates():
    donors = [donor("A", 0.0, 100.0, 1), donor("B", 1.0, 300.0, 2)]
    eps = 1e-9
    expected = (100.0 / eps + 300.0 / (1 + eps)) / (1 / eps + 1 / (1 + eps))
    assert pool(donors, "inverse-distance-weighted-mean") == pytest.approx(expected, rel=1e-12)
    assert pool(donors, "inverse-distance-weighted-mean") == pytest.approx(100.0, abs=1e-5)


@given(
    efforts=st.lists(st.floats(min_value=1.0, max_value=1e5), min_size=1, max_size=7),
    rule=st.sampled_from(["nearest", "mean", "inverse-distance-weighted-mean", "median"]),
)
@settings(max_examples=120, deadline=None)
def test_pool_bounded_by_donor_efforts(efforts, rule):
    donors = [donor(f"d{i}", 0.1 * i, e, i + 1) for i, e in enumerate(efforts)]
    value = pool(donors, rule)
    assert min(efforts) - 1e-9 <= value <= max(efforts) + 1e-9


# -- adaptation ---------------------------------------------------------------


def test_adapt_linear_scales_by_size_ratio():
    d = donor("A", 0.1, 500.0, 1)
    adapted, warning = adapt_linear(d, {"size": 150.0}, {"size": 100.0}, "size")
    assert warning is None
    assert adapted.adapted_effort == 750.0
    assert adapted.effort == 500.0


def test_adapt_linear_identity_when_sizes_equal():
    d = donor("A", 0.1, 500.0, 1)
    adapted, warning = adapt_linear(d, {"size": 100.0}, {"size": 100.0}, "size")
    assert adapted.adapted_effort == 500.0


def test_adapt_linear_fallback_on_missing():
    d = donor("A", 0.1, 500.0, 1)
    adapted, warning = adapt_linear(d, {"size": 150.0}, {"size": None}, "size")
    assert adapted.adapted_effort == 500.0
    assert "donor" in warning


# -- predict -------------------------------------------------------------------


def test_predict_identity_chain():
    base = [case("X", effort=42.0, a=3.0), case("Y", effort=99.0, a=9.0)]
    config = cfg(["a"], k=1)
    result = predict({"a": 3.0}, base, config, {"a": (0.0, 10.0)})
    assert result.estimate == 42.0
    assert result.donors[0].case_id == "X"
    assert not result.adapted


def test_predict_mean_of_two_donors():
    base = toy_base()
    config = cfg(["a"], k=2, pooling="mean")
    result = predict({"a": 1.0}, base, config, {"a": (0.0, 10.0)})
    assert result.estimate == 20.0  # donors A (10) and B (30)


def test_predict_median_matches_brute_force():
    base = toy_base()
    config = cfg(["a"], k=3, pooling="median")
    result = predict({"a": 4.0}, base, config, {"a": (0.0, 10.0)})
    ranked = sorted(
        base, key=lambda c: (abs(c.values["a"] - 4.0) / 10.0, c.id)
    )[:3]
    expected = sorted(c.effort for c in ranked)[1]
    assert result.estimate == expected


def test_predict_with_adaptation_flags_and_pools_adapted():
    base = [
        case("X", effort=500.0, size=100.0),
        case("Y", effort=900.0, size=None),
        case("Z", effort=100.0, size=400.0),
    ]
    config = cfg(["size"], k=2, pooling="mean", adaptation="linear-size")
    result = predict(
        {"size": 150.0}, base, config, {"size": (100.0, 400.0)}, size_feature="size"
    )
    assert result.adapted
    # donors: X at gap 50/300, Z at gap 250/300; X adapted 500*1.5=750, Z 100*0.375=37.5
    assert {d.case_id for d in result.donors} == {"X", "Z"}
    assert result.estimate == pytest.approx((750.0 + 37.5) / 2.0, rel=1e-12)
    assert result.warnings == ()


def test_predict_clamp_warning_for_out_of_range_target():
    base = toy_base()
    config = cfg(["a"], k=1)
    result = predict({"a": 25.0}, base, config, {"a": (0.0, 10.0)})
    assert any("outside training range" in w for w in result.warnings)


def test_estimate_recomputable_from_payload():
    base = toy_base()
    config = cfg(["a"], k=3, pooling="inverse-distance-weighted-mean")
    result = predict({"a": 2.0}, base, config, {"a": (0.0, 10.0)})
    assert pool(result.donors, result.config.pooling) == result.estimate
