import itertools
import math

import pytest
from hypothesis import given, strategies as st

from overlapq.errors import NonFinite, NonPositiveRate, UnclassifiableGeometry
from overlapq.model import (
    CaseId,
    Ordering,
    PairGeometry,
    Regime,
    Threshold,
    classify_case,
    classify_ordering,
    validate_params,
)

rates = st.floats(min_value=1e-3, max_value=1e3)


def test_alpha_direct_ratio():
    assert validate_params(10, 2).alpha == pytest.approx(10 / 12, rel=1e-15)
    assert validate_params(7, 7).alpha == 0.5


@pytest.mark.parametrize("lam, mu", [(4, -1), (0, 1), (1, 0), (-3, -3)])
def test_non_positive_rates_rejected(lam, mu):
    with pytest.raises(NonPositiveRate):
        validate_params(lam, mu)


@pytest.mark.parametrize("lam, mu", [(math.inf, 1), (1, math.nan), (-math.inf, 2)])
def test_non_finite_rates_rejected(lam, mu):
    with pytest.raises(NonFinite):
        validate_params(lam, mu)


@given(rates, rates)
def test_alpha_in_unit_interval(lam, mu):
    p = validate_params(lam, mu)
    assert 0 < p.alpha < 1
    assert p.alpha == lam / (lam + mu)


@given(rates, rates, st.floats(min_value=1.01, max_value=10))
def test_alpha_monotone(lam, mu, factor):
    base = validate_params(lam, mu).alpha
    assert validate_params(lam * factor, mu).alpha > base
    assert validate_params(lam, mu * factor).alpha < base


def test_regime_band():
    assert validate_params(3, 3).regime is Regime.LAMBDA_EQUAL
    assert validate_params(1 + 1e-12, 1).regime is Regime.LAMBDA_EQUAL
    assert validate_params(1 + 1e-6, 1).regime is Regime.LAMBDA_GREATER
    assert validate_params(1 - 1e-6, 1).regime is Regime.LAMBDA_LESS


def test_table_examples():
    assert classify_case(PairGeometry(2, 2, 0)).ordering is Ordering.SAME_PAIR_SAME_GAP
    assert classify_case(PairGeometry(3, 5, 1)).ordering is Ordering.INTERLEAVED_N_M_NJ_MK
    assert classify_case(PairGeometry(3, 2, -3)).ordering is Ordering.DISJOINT_MK_BEFORE_N


def test_all_orderings_reached():
    cases = {
        (2, 2, 0): 1, (2, 6, 0): 2, (3, 5, 1): 3, (2, 5, 3): 4, (6, 2, 1): 5,
        (6, 2, 0): 6, (5, 3, -1): 7, (3, 2, -3): 8, (2, 6, -1): 9,
    }
    for (j, k, d), number in cases.items():
        assert classify_ordering(j, k, d).value == number


def _positions_consistent(o: Ordering, j: int, k: int, d: int) -> bool:
    n, nj, m, mk = 0, j, d, d + k
    return {
        Ordering.SAME_PAIR_SAME_GAP: n == m and j == k,
        Ordering.SAME_START_J_LESS_K: n == m and j < k,
        Ordering.INTERLEAVED_N_M_NJ_MK: n < m < nj < mk,
        Ordering.DISJOINT_NJ_BEFORE_M: n < nj < m < mk,
        Ordering.NESTED_MK_INSIDE_NJ: n < m < mk < nj,
        Ordering.SAME_START_J_GREATER_K: n == m and j > k,
        Ordering.INTERLEAVED_M_N_MK_NJ: m < n < mk < nj,
        Ordering.DISJOINT_MK_BEFORE_N: m < mk < n < nj,
        Ordering.NESTED_NJ_INSIDE_MK: m < n < nj < mk,
    }[o]


def test_exhaustive_enumeration_is_exclusive_and_total():
    for d, j, k in itertools.product(range(-10, 11), range(1, 9), range(1, 9)):
        n, nj, m, mk = 0, j, d, d + k
        boundary = d != 0 and (nj == m or mk == n or mk == nj)
        if boundary:
            with pytest.raises(UnclassifiableGeometry):
                classify_ordering(j, k, d)
            continue
        o = classify_ordering(j, k, d)
        matching = [c for c in Ordering if _positions_consistent(c, j, k, d)]
        assert matching == [o], (j, k, d)
        # deterministic
        assert classify_ordering(j, k, d) is o


def test_regime_only_for_case_two():
    p = validate_params(4, 5)
    assert classify_case(PairGeometry(2, 6, 0), p) == CaseId(Ordering.SAME_START_J_LESS_K, Regime.LAMBDA_LESS)
    assert classify_case(PairGeometry(2, 2, 0), p).regime is None
    assert classify_case(PairGeometry(2, 6, 0)).regime is None


def test_table_labels_differ_only_for_last_three():
    differ = [o.value for o in Ordering if o.label != o.table_label]
    assert differ == [7, 8, 9]


def test_geometry_validation():
    with pytest.raises(ValueError):
        PairGeometry(0, 2)
    with pytest.raises(TypeError):
        PairGeometry(2.0, 2)
    g = PairGeometry(3, 5, 1, n=10)
    assert g.m == 11
    assert g.offsets() == (0, 3, 1, 6)


def test_threshold_non_negative():
    with pytest.raises(ValueError):
        Threshold(-0.1, 0)
    with pytest.raises(ValueError):
        Threshold(0, 0, math.nan)
