import math
import warnings

import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from overlapq.analytic import (
    DISCREPANCIES,
    Variant,
    conjecture_joint_tail,
    cross_pair_tail,
    joint_same_pair_tail,
    marginal_station1_tail,
    marginal_station2_tail,
    moments,
    rectangle_probabilities,
    sum_tail,
)
from overlapq.errors import DiscrepancyWarning, FormulaUnderReview, UnsupportedVariant
from overlapq.model import Ordering, PairGeometry, Regime, validate_params

T1 = validate_params(10, 2)
T2 = validate_params(7, 7)
T3 = validate_params(4, 5)

rates = st.floats(min_value=0.05, max_value=50)
gaps = st.integers(min_value=1, max_value=12)
times = st.floats(min_value=0, max_value=2)


def quiet_cross(*args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiscrepancyWarning)
        return cross_pair_tail(*args, **kw)


# -- same pair ------------------------------------------------------------

def test_joint_tail_values():
    assert joint_same_pair_tail(T2, 2, 0.04, 0.06) == pytest.approx(0.0308246, abs=1e-6)
    assert joint_same_pair_tail(T3, 2, 0.004, 0.006) == pytest.approx(0.0893674, abs=1e-6)
    p = validate_params(3, 1.5)
    assert joint_same_pair_tail(p, 1, 0, 0) == pytest.approx(p.alpha / 2, rel=1e-15)


def test_marginals():
    assert marginal_station1_tail(T1, 2, 0.004) == pytest.approx(0.683422, abs=1e-6)
    assert marginal_station2_tail(T1, 2, 0.006) == pytest.approx(0.451984, abs=1e-6)
    assert marginal_station1_tail(T1, 3, 0) == pytest.approx(T1.alpha**3, rel=1e-15)
    assert marginal_station2_tail(T2, 2, 0) == pytest.approx(0.25, rel=1e-15)
    p = validate_params(2, 3)
    assert marginal_station2_tail(p, 1, 0) == pytest.approx(p.alpha / 2 * (1 + 3 / 5), rel=1e-15)
    tails = [marginal_station1_tail(T1, k, 0.01) for k in range(1, 200)]
    assert all(b < a for a, b in zip(tails, tails[1:])) and tails[-1] < 1e-14


def test_rectangles():
    r = rectangle_probabilities(T1, 2, 0.004, 0.006)
    assert r.gt_gt == pytest.approx(0.333608, abs=1e-6)
    assert r.gt_le == pytest.approx(0.349814, abs=1e-6)
    far = rectangle_probabilities(T1, 2, 50.0, 0.006)
    assert far.gt_gt < 1e-80 and far.gt_le < 1e-80
    assert far.le_gt == pytest.approx(marginal_station2_tail(T1, 2, 0.006), rel=1e-12)


@given(rates, rates, gaps, times, times)
def test_quadrant_closure(lam, mu, k, x, y):
    r = rectangle_probabilities(validate_params(lam, mu), k, x, y)
    assert abs(r.total() - 1) <= 1e-12
    for v in (r.gt_gt, r.le_gt, r.gt_le, r.le_le):
        assert -1e-12 <= v <= 1 + 1e-12


@given(rates, rates, gaps)
def test_sum_tail_inclusion_exclusion(lam, mu, k):
    p = validate_params(lam, mu)
    union = marginal_station1_tail(p, k, 0) + marginal_station2_tail(p, k, 0) - joint_same_pair_tail(p, k, 0, 0)
    assert abs(sum_tail(p, k, 0) - union) <= 1e-12
    assert sum_tail(p, k, 0) == pytest.approx(p.alpha**k * (1 + (1 - p.alpha) * k / 2), rel=1e-12)


def test_sum_tail_variants():
    assert sum_tail(T1, 2, 0.01) == pytest.approx(0.791762, abs=1e-6)
    printed = sum_tail(validate_params(100, 1), 1, 0, Variant.AS_PRINTED)
    assert printed > 1
    assert printed == pytest.approx(1.49005, abs=1e-5)
    p = validate_params(3, 2)
    for k in (1, 4):
        assert sum_tail(p, k, 0, Variant.AS_PRINTED) == pytest.approx(
            p.alpha**k * (1.5 + (1 - p.alpha) * k / 2), rel=1e-12
        )


def test_sum_tail_matches_convolution_of_tails():
    # split on which overlaps are positive; the both-positive part has the
    # density obtained by differentiating the joint tail
    p, k, ell = T1, 2, 0.01
    mu, a_k = p.mu, p.alpha**k
    dens = lambda y, x: 4 * mu**2 * math.exp(-2 * mu * (x + y)) * a_k / 2
    both, _ = integrate.dblquad(dens, 0, math.inf, lambda x: max(ell - x, 0), math.inf)
    only1 = marginal_station1_tail(p, k, ell) - joint_same_pair_tail(p, k, ell, 0)  # O2 = 0
    only2 = marginal_station2_tail(p, k, ell) - joint_same_pair_tail(p, k, 0, ell)  # O1 = 0
    assert sum_tail(p, k, ell) == pytest.approx(both + only1 + only2, rel=1e-9)


@settings(max_examples=200)
@given(rates, rates, gaps, times, times, st.floats(min_value=0, max_value=1), st.integers(min_value=0, max_value=3))
def test_dominance_and_monotonicity(lam, mu, k, x, y, dx, dk):
    p = validate_params(lam, mu)
    joint = joint_same_pair_tail(p, k, x, y)
    m1 = marginal_station1_tail(p, k, x)
    m2 = marginal_station2_tail(p, k, y)
    assert joint <= min(m1, m2) * (1 + 1e-12)
    assert joint_same_pair_tail(p, k, x + dx, y) <= joint
    assert joint_same_pair_tail(p, k, x, y + dx) <= joint
    assert joint_same_pair_tail(p, k + dk, x, y) <= joint
    assert marginal_station1_tail(p, k + dk, x + dx) <= m1
    assert marginal_station2_tail(p, k, y + dx) <= m2
    assert sum_tail(p, k, x + dx) <= sum_tail(p, k, x)
    # station-2 marginal is nonincreasing in k as well: ratio a(1 + (1-a)(k+1)) / (1 + (1-a)k) <= 1
    assert marginal_station2_tail(p, k + dk, y) <= m2 * (1 + 1e-12)


# -- moments --------------------------------------------------------------

def test_moment_values():
    m = moments(T1, 2)
    assert m.e1 == pytest.approx(0.173611, abs=1e-6)
    assert m.e2 == pytest.approx(0.115741, abs=1e-6)
    assert m.cov == pytest.approx(0.0016075, abs=1e-7)
    assert m.e12 == pytest.approx(T1.alpha**2 / 32, rel=1e-14)


def test_moments_vanish_for_fast_service():
    m = moments(validate_params(1, 1e6), 2)
    assert max(abs(v) for v in m.__dict__.values()) < 1e-12


def test_moments_match_tail_integrals():
    p, k = validate_params(3, 2), 3
    e1, _ = integrate.quad(lambda x: marginal_station1_tail(p, k, x), 0, math.inf)
    e2, _ = integrate.quad(lambda y: marginal_station2_tail(p, k, y), 0, math.inf)
    sq1, _ = integrate.quad(lambda x: 2 * x * marginal_station1_tail(p, k, x), 0, math.inf)
    m = moments(p, k)
    assert m.e1 == pytest.approx(e1, rel=1e-10)
    assert m.e2 == pytest.approx(e2, rel=1e-10)
    assert m.var1 == pytest.approx(sq1 - e1**2, rel=1e-10)


@given(rates, rates, gaps)
def test_moment_invariants(lam, mu, k):
    m = moments(validate_params(lam, mu), k)
    m.check()
    assert m.var1 >= 0 and m.var2 >= 0


# -- conjecture -----------------------------------------------------------

def test_conjecture_reductions():
    p = T1
    assert conjecture_joint_tail(p, 2, [0.004]) == pytest.approx(marginal_station1_tail(p, 2, 0.004), rel=1e-15)
    assert conjecture_joint_tail(p, 2, [0.004, 0.006]) == pytest.approx(joint_same_pair_tail(p, 2, 0.004, 0.006), rel=1e-15)
    assert conjecture_joint_tail(p, 2, [0.004, 0.006, 0.005]) == pytest.approx(0.163501, abs=1e-6)
    with pytest.raises(ValueError):
        conjecture_joint_tail(p, 2, [0.1, 0.2], N=3)


# -- cross pairs ----------------------------------------------------------

TABLE_ONE = [
    ((2, 2, 0), 0.333607), ((2, 6, 0), 0.268995), ((3, 5, 1), 0.211071),
    ((2, 5, 3), 0.245794), ((6, 2, 1), 0.151971), ((6, 2, 0), 0.136066),
    ((5, 3, -1), 0.171671), ((3, 2, -3), 0.257413), ((2, 6, -1), 0.230771),
]


@pytest.mark.parametrize("geom, expected", TABLE_ONE)
def test_cross_pair_reference_values(geom, expected):
    res = quiet_cross(T1, PairGeometry(*geom), 0.004, 0.006)
    assert res.probability == pytest.approx(expected, abs=1e-6)
    assert res.case.number == TABLE_ONE.index((geom, expected)) + 1


def test_case_six_equal_rates():
    res = cross_pair_tail(T2, PairGeometry(6, 2, 0), 0.04, 0.06)
    assert res.probability == pytest.approx(0.0007516, abs=1e-6)


@given(rates, rates, gaps, times, times)
def test_case_one_is_joint_tail(lam, mu, k, x, y):
    p = validate_params(lam, mu)
    value = cross_pair_tail(p, PairGeometry.same_pair(k), x, y).probability
    assert abs(value - joint_same_pair_tail(p, k, x, y)) <= 1e-12 * max(1.0, value)


def _case2_by_quadrature(p, j, k, x, y):
    """Same conditional decomposition, integrated numerically over the
    Erlang(k-j) gap G between n+j and n+k."""
    lam, mu, a = p.lam, p.mu, p.alpha
    r = k - j
    pdf = stats.gamma(r, scale=1 / lam).pdf
    slow = math.exp(-mu * (3 * x + 2 * y))
    fast = math.exp(-mu * (x + 2 * y))

    def below(g):
        return slow * a**j / 4 * math.exp(mu * g) * (2 + 2 * mu * (x - g))

    def above(g):
        return fast * a**j * math.exp(-mu * g) * (0.5 + mu * (g - x) / 2)

    lo, _ = integrate.quad(lambda g: below(g) * pdf(g), 0, x, epsabs=0, epsrel=1e-12)
    hi, _ = integrate.quad(lambda g: above(g) * pdf(g), x, math.inf, epsabs=0, epsrel=1e-12)
    return lo + hi


@pytest.mark.parametrize("lam, mu", [(10, 2), (7, 7), (4, 5), (1, 3), (3, 1)])
@pytest.mark.parametrize("j, k", [(2, 6), (1, 2), (3, 4), (1, 7)])
@pytest.mark.parametrize("x, y", [(0.004, 0.006), (0.04, 0.06), (0.5, 0.1)])
def test_case_two_matches_integral_over_gap(lam, mu, j, k, x, y):
    p = validate_params(lam, mu)
    value = cross_pair_tail(p, PairGeometry(j, k, 0), x, y).probability
    assert value == pytest.approx(_case2_by_quadrature(p, j, k, x, y), rel=1e-8)


@pytest.mark.parametrize("j, k", [(2, 6), (1, 3), (4, 5)])
@pytest.mark.parametrize("x, y", [(0.004, 0.006), (0.3, 0.2)])
def test_case_two_regime_continuity(j, k, x, y):
    mu = 3.0
    g = PairGeometry(j, k, 0)
    at_equal = cross_pair_tail(validate_params(mu, mu), g, x, y).probability
    assert validate_params(mu, mu).regime is Regime.LAMBDA_EQUAL
    for eps in (1e-4, 1e-6):
        above = cross_pair_tail(validate_params(mu * (1 + eps), mu), g, x, y).probability
        below = cross_pair_tail(validate_params(mu * (1 - eps), mu), g, x, y).probability
        assert abs(above - at_equal) <= 10 * eps * at_equal
        assert abs(below - at_equal) <= 10 * eps * at_equal


def test_case_two_large_gap_log_space():
    res = cross_pair_tail(validate_params(10, 2), PairGeometry(2, 60, 0), 0.01, 0.01)
    assert 0 <= res.probability < 1e-3 and math.isfinite(res.probability)
    assert res.probability == pytest.approx(_case2_by_quadrature(validate_params(10, 2), 2, 60, 0.01, 0.01), rel=1e-7)


@given(
    st.floats(min_value=0.5, max_value=20), st.floats(min_value=0.5, max_value=20),
    st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=6),
    st.integers(min_value=-8, max_value=8), times, times, st.floats(min_value=0, max_value=0.5),
)
def test_cross_pair_is_probability_and_monotone(lam, mu, j, k, d, x, y, dx):
    g = PairGeometry(j, k, d)
    if d != 0 and (d == j or d + k == 0 or d + k == j):
        return
    p = validate_params(lam, mu)
    v = quiet_cross(p, g, x, y).probability
    assert 0 <= v <= 1
    assert quiet_cross(p, g, x + dx, y).probability <= v * (1 + 1e-9) + 1e-15
    assert quiet_cross(p, g, x, y + dx).probability <= v * (1 + 1e-9) + 1e-15


def test_printed_variants():
    g3 = PairGeometry(3, 5, 1)
    printed = cross_pair_tail(T1, g3, 0.004, 0.006, variant=Variant.AS_PRINTED)
    assert printed.probability == pytest.approx(0.38837, abs=1e-5)
    assert printed.flags == ("case3-printed",)
    g2 = PairGeometry(2, 6, 0)
    assert cross_pair_tail(T1, g2, 0.004, 0.006, variant=Variant.AS_PRINTED).probability == pytest.approx(0.18791, abs=1e-5)
    with pytest.raises(UnsupportedVariant):
        cross_pair_tail(T3, g2, 0.004, 0.006, variant=Variant.AS_PRINTED)
    # rows with a single published form are identical under both variants
    for geom in [(2, 2, 0), (2, 5, 3), (6, 2, 0), (5, 3, -1), (3, 2, -3), (2, 6, -1)]:
        g = PairGeometry(*geom)
        assert cross_pair_tail(T1, g, 0.004, 0.006, variant=Variant.AS_PRINTED).probability == \
            cross_pair_tail(T1, g, 0.004, 0.006).probability


def test_nested_case_warns_and_strict_refuses():
    g5 = PairGeometry(6, 2, 1)
    with pytest.warns(DiscrepancyWarning):
        res = cross_pair_tail(T1, g5, 0.004, 0.006)
    assert "case5-table" in res.flags and "case5-table" in DISCREPANCIES
    with pytest.raises(FormulaUnderReview):
        cross_pair_tail(T1, g5, 0.004, 0.006, strict=True)
    with pytest.raises(FormulaUnderReview):
        cross_pair_tail(T1, PairGeometry(3, 5, 1), 0.004, 0.006, variant=Variant.AS_PRINTED, strict=True)
    assert cross_pair_tail(T1, PairGeometry(3, 5, 1), 0.004, 0.006, strict=True).flags == ()


def test_result_unpacks_to_probability_and_case():
    prob, case = cross_pair_tail(T1, PairGeometry(3, 2, -3), 0.004, 0.006)
    assert case.ordering is Ordering.DISJOINT_MK_BEFORE_N
    assert prob == pytest.approx(0.257414, abs=1e-6)
