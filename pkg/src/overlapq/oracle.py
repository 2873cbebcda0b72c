"""Verification paths that share no code with the closed forms or the
queue recursion.

``mc_event_probability`` samples the raw variables of the integral
decompositions (Erlang arrival gaps and independent Exp(mu) services) and
evaluates each event as a system of linear inequalities. The systems are
data: every ordering is described by the left-to-right order of the four
observed customers, from which the coefficient rows are built.

``quadrature_cross_moment`` integrates the joint tail over the positive
quadrant to get E[O1 O2].
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from overlapq.analytic import joint_same_pair_tail
from overlapq.errors import QuadratureNonConvergence, UnsupportedEvent
from overlapq.model import (
    CaseId,
    Ordering,
    PairGeometry,
    RateParams,
    Threshold,
    classify_case,
)
from overlapq.simulator import TailEstimate

BLOCK = 1 << 16


class Side(enum.Enum):
    """Which branch of the station-2 split: E2 means the earlier customer
    of the station-2 pair leaves station 1 first."""

    E2 = "E2"
    E2_COMPLEMENT = "E2c"
    BOTH = "both"


@dataclass(frozen=True)
class EventSpec:
    case: CaseId
    side: Side
    thresholds: Threshold
    stations: tuple[int, ...] = (1, 2)

    def __post_init__(self) -> None:
        if not self.stations or not set(self.stations) <= {1, 2}:
            raise UnsupportedEvent(f"stations must be a non-empty subset of (1, 2), got {self.stations}")
        if 2 not in self.stations and self.side is not Side.BOTH:
            raise UnsupportedEvent("the E2 split only exists for events involving station 2")


# Left-to-right order of the observed customers for each ordering.
# a = n, b = n+j (station-1 pair); c = m, d = m+k (station-2 pair).
# Customers sharing an index share a group.
CATALOG: dict[Ordering, tuple[tuple[str, ...], ...]] = {
    Ordering.SAME_PAIR_SAME_GAP: (("a", "c"), ("b", "d")),
    Ordering.SAME_START_J_LESS_K: (("a", "c"), ("b",), ("d",)),
    Ordering.INTERLEAVED_N_M_NJ_MK: (("a",), ("c",), ("b",), ("d",)),
    Ordering.DISJOINT_NJ_BEFORE_M: (("a",), ("b",), ("c",), ("d",)),
    Ordering.NESTED_MK_INSIDE_NJ: (("a",), ("c",), ("d",), ("b",)),
    Ordering.SAME_START_J_GREATER_K: (("a", "c"), ("d",), ("b",)),
    Ordering.INTERLEAVED_M_N_MK_NJ: (("c",), ("a",), ("d",), ("b",)),
    Ordering.DISJOINT_MK_BEFORE_N: (("c",), ("d",), ("a",), ("b",)),
    Ordering.NESTED_NJ_INSIDE_MK: (("c",), ("a",), ("b",), ("d",)),
}


@dataclass(frozen=True)
class Layout:
    """Variable vector: [gap_0..gap_{G-1}, S1_0..S1_{G}, S2_c, S2_d] where
    gap_i is the Erlang gap between consecutive customer groups."""

    shapes: tuple[int, ...]
    group: dict[str, int]

    @property
    def n_gaps(self) -> int:
        return len(self.shapes)

    @property
    def n_vars(self) -> int:
        return 2 * self.n_gaps + 3

    def s1(self, who: str) -> int:
        return self.n_gaps + self.group[who]

    def s2(self, who: str) -> int:
        return 2 * self.n_gaps + 1 + "cd".index(who)

    def gap_between(self, first: str, second: str) -> np.ndarray:
        row = np.zeros(self.n_vars)
        row[self.group[first]:self.group[second]] = 1.0
        return row


def _layout(ordering: Ordering, g: PairGeometry) -> Layout:
    pos = {"a": 0, "b": g.j, "c": g.delta, "d": g.delta + g.k}
    groups = CATALOG[ordering]
    group = {who: i for i, members in enumerate(groups) for who in members}
    anchors = [pos[members[0]] for members in groups]
    shapes = tuple(b - a for a, b in zip(anchors, anchors[1:]))
    if any(s < 1 for s in shapes) or any(pos[w] != anchors[group[w]] for w in pos):
        raise UnsupportedEvent(f"geometry {g} does not have the {ordering.label} layout")
    return Layout(shapes, group)


@dataclass(frozen=True)
class Row:
    """coef . v > x_coef * x + y_coef * y (or >= when not strict)."""

    coef: np.ndarray
    x_coef: float = 0.0
    y_coef: float = 0.0
    strict: bool = True


def event_rows(e: EventSpec, g: PairGeometry, side: Side) -> tuple[Layout, list[Row]]:
    """Inequality system for one side of the split (``side`` != BOTH unless
    station 2 is not involved)."""
    lay = _layout(e.case.ordering, g)
    n = lay.n_vars

    def unit(i: int) -> np.ndarray:
        v = np.zeros(n)
        v[i] = 1.0
        return v

    rows: list[Row] = []
    if 1 in e.stations:
        # a entered first; overlap is min(S1_a, G_ab + S1_b) - G_ab
        rows.append(Row(unit(lay.s1("a")) - lay.gap_between("a", "b"), x_coef=1))
        rows.append(Row(unit(lay.s1("b")), x_coef=1))
    if 2 in e.stations:
        h = lay.gap_between("c", "d")
        s1c, s1d = unit(lay.s1("c")), unit(lay.s1("d"))
        s2c, s2d = unit(lay.s2("c")), unit(lay.s2("d"))
        if side is Side.E2:
            rows.append(Row(h + s1d - s1c, strict=False))
            rows.append(Row(s1c + s2c - h - s1d, y_coef=1))
            rows.append(Row(s2d, y_coef=1))
        elif side is Side.E2_COMPLEMENT:
            rows.append(Row(s1c - h - s1d))
            rows.append(Row(s2c, y_coef=1))
            rows.append(Row(h + s1d + s2d - s1c, y_coef=1))
        else:
            raise UnsupportedEvent("station-2 events must be split into E2 / E2c")
    return lay, rows


def _sample(rng: np.random.Generator, lay: Layout, p: RateParams, size: int) -> np.ndarray:
    v = np.empty((size, lay.n_vars))
    for i, shape in enumerate(lay.shapes):
        v[:, i] = rng.gamma(shape, 1.0 / p.lam, size)
    v[:, lay.n_gaps:] = rng.exponential(1.0 / p.mu, (size, lay.n_vars - lay.n_gaps))
    return v


def _indicator(v: np.ndarray, rows: list[Row], x: float, y: float) -> np.ndarray:
    coef = np.stack([r.coef for r in rows], axis=1)
    rhs = np.array([r.x_coef * x + r.y_coef * y for r in rows])
    lhs = v @ coef
    strict = np.array([r.strict for r in rows])
    ok = np.where(strict, lhs > rhs, lhs >= rhs)
    return ok.all(axis=1)


def mc_event_probability(
    e: EventSpec,
    p: RateParams,
    g: PairGeometry,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> TailEstimate:
    if n_samples < 1 or workers < 1:
        raise ValueError("n_samples and workers must be >= 1")
    actual = classify_case(g)
    if actual.ordering is not e.case.ordering:
        raise UnsupportedEvent(f"event is for {e.case}, geometry is {actual}")
    if 2 in e.stations and e.side is Side.BOTH:
        sides = [Side.E2, Side.E2_COMPLEMENT]
    else:
        sides = [e.side]
    systems = [event_rows(e, g, s) for s in sides]
    lay = systems[0][0]
    x, y = e.thresholds.x, e.thresholds.y
    n_blocks = -(-n_samples // BLOCK)

    def block(b: int) -> int:
        rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), b]))
        size = min(BLOCK, n_samples - b * BLOCK)
        v = _sample(rng, lay, p, size)
        hit = np.zeros(size, dtype=bool)
        for _, rows in systems:
            hit |= _indicator(v, rows, x, y)  # the sides are disjoint
        return int(np.count_nonzero(hit))

    if workers == 1:
        hits = sum(block(b) for b in range(n_blocks))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(block, range(n_blocks)))
    p_hat = hits / n_samples
    return TailEstimate(p_hat, n_samples, math.sqrt(p_hat * (1 - p_hat) / n_samples), seed)


def quadrature_cross_moment(p: RateParams, k: int, epsrel: float = 1e-10) -> float:
    """E[O1 O2] as the integral of P(O1 > x, O2 > y) over the positive
    quadrant, mapped to the unit square by u = exp(-2 mu x), v = exp(-2 mu y)."""
    two_mu = 2 * p.mu

    def integrand(v: float, u: float) -> float:
        x = -math.log(u) / two_mu
        y = -math.log(v) / two_mu
        return joint_same_pair_tail(p, k, x, y) / (two_mu * two_mu * u * v)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.dblquad(integrand, 0.0, 1.0, 0.0, 1.0, epsabs=0.0, epsrel=epsrel)
        except integrate.IntegrationWarning as exc:
            raise QuadratureNonConvergence(str(exc)) from exc
    if not math.isfinite(value) or abserr > max(epsrel * abs(value), 1e-300):
        raise QuadratureNonConvergence(f"estimate {value} with error {abserr}")
    return value
