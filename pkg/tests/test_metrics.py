import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from analogest.metrics import (
    MetricError,
    MetricResult,
    ResidualEntry,
    ResidualSet,
    bootstrap_ci,
    bootstrap_cohens_d,
    cohens_d,
    mar,
    mdmre,
    mmre,
    pred,
    random_guess_mar,
    standardised_accuracy,
)


def residual_set(pairs, label="test"):
    return ResidualSet(
        entries=tuple(
            ResidualEntry(case_id=f"c{i}", actual=a, predicted=p)
            for i, (a, p) in enumerate(pairs)
        ),
        predictor_label=label,
    )


# Hand set with dyadic relative errors so every intermediate is exact:
# MREs are 0.25, 0.25, 0.5, 0.25, 0.0.
HAND_PAIRS = [(100.0, 125.0), (200.0, 250.0), (400.0, 200.0), (800.0, 1000.0), (160.0, 160.0)]
HAND = residual_set(HAND_PAIRS)


def test_mmre_hand_value():
    assert mmre(HAND) == 25.0


def test_mmre_footnote_arithmetic():
    rs = residual_set([(100.0, 150.0), (200.0, 100.0)])
    assert mmre(rs) == 50.0


def test_mmre_perfect_and_single():
    assert mmre(residual_set([(100.0, 100.0), (50.0, 50.0)])) == 0.0
    assert mmre(residual_set([(100.0, 125.0)])) == 25.0


def test_mmre_uses_absolute_values():
    over = residual_set([(100.0, 150.0)])
    under = residual_set([(100.0, 50.0)])
    assert mmre(over) == mmre(under) == 50.0
    mixed = residual_set([(100.0, 150.0), (100.0, 50.0)])
    assert mmre(mixed) == 50.0  # no cancellation


def test_mdmre_rules():
    assert mdmre(residual_set([(100.0, 110.0), (100.0, 120.0), (100.0, 190.0)])) == 20.0
    assert mdmre(residual_set([(100.0, 110.0), (100.0, 130.0)])) == 20.0
    assert mdmre(residual_set([(100.0, 125.0)] * 1)) == 25.0


def test_pred_boundary_counts_inside():
    rs = residual_set([(100.0, 110.0), (100.0, 125.0), (100.0, 140.0)])
    assert pred(rs, 25.0) == 2 / 3
    assert pred(residual_set([(100.0, 130.0)] * 1), 25.0) == 0.0
    assert pred(residual_set([(100.0, 100.0)]), 25.0) == 1.0


def test_mar_hand_values():
    assert mar(HAND) == 95.0
    assert mar(residual_set([(100.0, 110.0), (100.0, 130.0)])) == 20.0
    assert mar(residual_set([(100.0, 100.0)])) == 0.0


def test_empty_set_rejected():
    empty = ResidualSet(entries=())
    for fn in (mmre, mdmre, mar):
        with pytest.raises(MetricError):
            fn(empty)
    with pytest.raises(MetricError):
        pred(empty, 25.0)


def test_random_guess_mar_brute_force():
    efforts = [100.0, 200.0, 400.0, 800.0, 160.0]
    # O(n^2) double loop, written out independently
    n = len(efforts)
    total = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if i != j:
                acc += abs(efforts[i] - efforts[j])
        total += acc / (n - 1)
    expected = total / n
    assert expected == 328.0
    assert random_guess_mar(efforts) == expected


def test_standardised_accuracy_values():
    efforts = [100.0, 200.0, 400.0, 800.0, 160.0]
    assert standardised_accuracy(HAND, efforts) == (1.0 - 95.0 / 328.0) * 100.0
    perfect = residual_set([(e, e) for e in efforts])
    assert standardised_accuracy(perfect, efforts) == 100.0


def test_standardised_accuracy_zero_for_exact_guess_expectation():
    efforts = [100.0, 200.0, 400.0, 800.0, 160.0]
    n = len(efforts)
    entries = []
    for i in range(n):
        expected_abs = sum(abs(efforts[i] - efforts[j]) for j in range(n) if j != i) / (n - 1)
        entries.append((efforts[i], efforts[i] + expected_abs))
    rs = residual_set(entries)
    assert standardised_accuracy(rs, efforts) == 0.0


def test_standardised_accuracy_degenerate_efforts():
    with pytest.raises(MetricError, match="all efforts are equal"):
        standardised_accuracy(residual_set([(5.0, 5.0), (5.0, 6.0)]), [5.0, 5.0])


def test_sa_strictly_decreasing_in_mar():
    efforts = [100.0, 200.0, 400.0, 800.0, 160.0]
    small = residual_set([(e, e + 10.0) for e in efforts])
    large = residual_set([(e, e + 50.0) for e in efforts])
    assert standardised_accuracy(small, efforts) > standardised_accuracy(large, efforts)


def test_cohens_d_identical_sets_zero():
    assert cohens_d(HAND, HAND) == 0.0


def test_cohens_d_formula_arithmetic():
    # abs residuals a: 25, 50, 200, 200, 0 (mean 95); b: 10, 20, 30, 40, 100 (mean 40)
    b = residual_set(
        [(100.0, 110.0), (100.0, 120.0), (100.0, 130.0), (100.0, 140.0), (200.0, 100.0)]
    )
    a_vals = [25.0, 50.0, 200.0, 200.0, 0.0]
    b_vals = [10.0, 20.0, 30.0, 40.0, 100.0]
    mean_a, mean_b = 95.0, 40.0
    var_a = sum((x - mean_a) ** 2 for x in a_vals) / 4
    var_b = sum((x - mean_b) ** 2 for x in b_vals) / 4
    assert (var_a, var_b) == (9500.0, 1250.0)
    pooled = math.sqrt((4 * var_a + 4 * var_b) / 8)
    assert cohens_d(HAND, b) == (mean_a - mean_b) / pooled
    assert cohens_d(b, HAND) == -cohens_d(HAND, b)


def test_cohens_d_known_direction():
    # means 10 vs 20, sd 5 each: d = -2 for a-vs-b
    a = residual_set([(100.0, 105.0), (100.0, 110.0), (100.0, 115.0)])
    b = residual_set([(100.0, 115.0), (100.0, 120.0), (100.0, 125.0)])
    assert cohens_d(a, b) == -2.0


def test_cohens_d_zero_variance_unequal_means():
    a = residual_set([(100.0, 110.0), (200.0, 210.0)])
    b = residual_set([(100.0, 120.0), (200.0, 220.0)])
    assert cohens_d(a, b) == -math.inf
    assert cohens_d(b, a) == math.inf


def test_cohens_d_needs_three():
    a = residual_set([(100.0, 110.0)])
    with pytest.raises(MetricError):
        cohens_d(a, a)


# -- scale equivariance properties ------------------------------------------

scales = st.floats(min_value=0.01, max_value=1000.0, allow_nan=False)
pair_lists = st.lists(
    st.tuples(
        st.floats(min_value=1.0, max_value=1e5),
        st.floats(min_value=0.5, max_value=1e5),
    ),
    min_size=1,
    max_size=12,
)


@given(pairs=pair_lists, c=scales)
@settings(max_examples=80, deadline=None)
def test_relative_metrics_scale_invariant(pairs, c):
    rs = residual_set(pairs)
    # rounding can flip an MRE sitting exactly on the pred threshold
    assume(all(abs(e.mre - 0.25) > 1e-9 for e in rs.entries))
    scaled = residual_set([(a * c, p * c) for a, p in pairs])
    assert mmre(scaled) == pytest.approx(mmre(rs), rel=1e-9)
    assert mdmre(scaled) == pytest.approx(mdmre(rs), rel=1e-9)
    assert pred(scaled, 25.0) == pred(rs, 25.0)
    assert mar(scaled) == pytest.approx(mar(rs) * c, rel=1e-9)


@given(pairs=pair_lists)
@settings(max_examples=50, deadline=None)
def test_pred_monotone_in_threshold(pairs):
    rs = residual_set(pairs)
    values = [pred(rs, t) for t in (5.0, 25.0, 50.0, 100.0, 1e9)]
    assert values == sorted(values)
    assert values[-1] == 1.0


# -- bootstrap ---------------------------------------------------------------


def test_bootstrap_constant_residuals_degenerate_interval():
    rs = residual_set([(100.0, 125.0), (200.0, 250.0), (400.0, 500.0)])
    result = bootstrap_ci(rs, mmre, b=200, seed=11, name="mmre")
    assert result.ci_low == result.value == result.ci_high == 25.0


def test_bootstrap_deterministic_given_seed():
    rs = HAND
    first = bootstrap_ci(rs, mmre, b=300, seed=42, name="mmre")
    second = bootstrap_ci(rs, mmre, b=300, seed=42, name="mmre")
    assert first == second
    different = bootstrap_ci(rs, mmre, b=300, seed=43, name="mmre")
    assert different != first


def test_bootstrap_interval_brackets_value():
    rs = HAND
    result = bootstrap_ci(rs, mar, b=500, seed=1, name="mar")
    assert result.ci_low <= result.value <= result.ci_high
    assert result.n == 5 and result.bootstrap_b == 500 and result.seed == 1


def test_bootstrap_requires_minimum_b():
    with pytest.raises(MetricError, match="b >= 100"):
        bootstrap_ci(HAND, mmre, b=50, seed=0)


def test_bootstrap_redraws_failing_resamples():
    # a metric that rejects single-case resamples forces occasional redraws
    def picky(rs):
        if len({e.case_id for e in rs.entries}) < 2:
            raise MetricError("degenerate resample")
        return mar(rs)

    rs = residual_set([(100.0, 125.0), (200.0, 260.0), (400.0, 380.0)])
    first = bootstrap_ci(rs, picky, b=300, seed=5, name="mar")
    second = bootstrap_ci(rs, picky, b=300, seed=5, name="mar")
    assert first == second
    assert first.ci_low <= first.value <= first.ci_high


def test_bootstrap_redraw_budget_exhausts():
    def always_fails(rs):
        raise MetricError("nope")

    rs = residual_set([(100.0, 125.0), (200.0, 260.0)])
    rs_value = residual_set([(100.0, 125.0), (200.0, 260.0)])
    with pytest.raises(MetricError, match="nope"):
        bootstrap_ci(rs, lambda r: mar(r) if r is rs_value else always_fails(r), b=100, seed=0)


def test_bootstrap_paired_cohens_d():
    rng = np.random.default_rng(9)
    ids = [f"c{i}" for i in range(20)]
    a = ResidualSet(
        entries=tuple(
            ResidualEntry(case_id=i, actual=100.0, predicted=100.0 + float(e))
            for i, e in zip(ids, rng.normal(30, 5, 20))
        )
    )
    b = ResidualSet(
        entries=tuple(
            ResidualEntry(case_id=i, actual=100.0, predicted=100.0 + float(e))
            for i, e in zip(ids, rng.normal(10, 5, 20))
        )
    )
    result = bootstrap_cohens_d(a, b, b=300, seed=3)
    assert result.value == cohens_d(a, b)
    assert result.ci_low <= result.value <= result.ci_high
    assert result.value > 0  # a has larger error
