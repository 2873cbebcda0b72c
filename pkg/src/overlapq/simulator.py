"""Monte Carlo for the (M/M/inf)^N tandem queue.

Two sampling modes:

* replication mode (primary): every replication draws only the Erlang
  gaps between the customers involved and their service times, so
  replications are i.i.d. and the binomial standard error is exact;
* trajectory mode (validation): one long sample path, every window of the
  requested shape scanned. Windows overlap, so the reported standard error
  is the naive i.i.d. one.

Replications are generated in fixed chunks of ``CHUNK_SIZE``. Chunk ``c``
uses a Philox stream keyed by ``(seed, c)``, and per-chunk results are
reduced in chunk order, so the estimate depends on ``(seed, n_samples)``
only and never on ``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from overlapq import analytic
from overlapq.analytic import MomentSet
from overlapq.errors import IndexOutOfRange
from overlapq.model import PairGeometry, RateParams, classify_case

CHUNK_SIZE = 1 << 16
N_BATCHES = 100
_MASK64 = (1 << 64) - 1


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Counter-based stream for one chunk; the key packs (seed, chunk)."""
    key = (int(seed) & _MASK64) | ((int(chunk) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def _exponential(rng: np.random.Generator, rate: float, size) -> np.ndarray:
    # 1 - U lies in (0, 1], so the log is finite
    return -np.log1p(-rng.random(size)) / rate


def _erlang(rng: np.random.Generator, shape: int, rate: float, size) -> np.ndarray:
    return rng.gamma(shape, 1.0 / rate, size)


def _overlap(prev_a, prev_b, dep_a, dep_b):
    """(min departure - max entry)^+ for two customers at one station."""
    return np.maximum(np.minimum(dep_a, dep_b) - np.maximum(prev_a, prev_b), 0.0)


# -- trajectories ---------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """``departures[0]`` are the arrival times; ``departures[i]`` the
    departures from station ``i``."""

    arrivals: np.ndarray
    services: np.ndarray
    departures: np.ndarray

    @property
    def n_customers(self) -> int:
        return self.arrivals.shape[0]

    @property
    def n_stations(self) -> int:
        return self.services.shape[0]


def simulate_tandem(p: RateParams, n_customers: int, n_stations: int, seed: int) -> Trajectory:
    if n_customers < 2:
        raise ValueError("need at least two customers")
    if n_stations < 1:
        raise ValueError("need at least one station")
    rng = chunk_rng(seed, 0)
    arrivals = np.cumsum(_exponential(rng, p.lam, n_customers))
    services = _exponential(rng, p.mu, (n_stations, n_customers))
    departures = np.empty((n_stations + 1, n_customers))
    departures[0] = arrivals
    for i in range(n_stations):
        departures[i + 1] = departures[i] + services[i]
    return Trajectory(arrivals, services, departures)


def extract_overlap(t: Trajectory, station: int, n: int, gap: int) -> float:
    """Overlap of customers ``n`` and ``n + gap`` in ``station`` (1-based)."""
    if not 1 <= station <= t.n_stations:
        raise IndexOutOfRange(f"station {station} not in 1..{t.n_stations}")
    if gap < 1 or n < 0 or n + gap >= t.n_customers:
        raise IndexOutOfRange(f"pair ({n}, {n + gap}) outside 0..{t.n_customers - 1}")
    d = t.departures
    return float(_overlap(d[station - 1, n], d[station - 1, n + gap], d[station, n], d[station, n + gap]))


def trajectory_overlaps(t: Trajectory, station: int, first: int, gap: int, count: int) -> np.ndarray:
    """Overlaps of (first + i, first + i + gap) for i in range(count)."""
    d = t.departures
    a = slice(first, first + count)
    b = slice(first + gap, first + gap + count)
    return _overlap(d[station - 1, a], d[station - 1, b], d[station, a], d[station, b])


# -- estimates ------------------------------------------------------------

@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    n: int
    stderr: float
    seed: int

    def z(self, reference: float) -> float:
        diff = self.p_hat - reference
        if self.stderr > 0:
            return diff / self.stderr
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def _binomial(successes: int, n: int, seed: int) -> TailEstimate:
    p_hat = successes / n
    return TailEstimate(p_hat, n, math.sqrt(p_hat * (1 - p_hat) / n), seed)


def _check_run(n_samples: int, workers: int) -> None:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")


def _run_chunks(
    n_samples: int,
    seed: int,
    workers: int,
    fn: Callable[[np.random.Generator, int, int], np.ndarray],
) -> np.ndarray:
    """Apply ``fn(rng, start, size)`` to every chunk and sum in chunk order."""
    _check_run(n_samples, workers)
    n_chunks = -(-n_samples // CHUNK_SIZE)

    def one(c: int) -> np.ndarray:
        start = c * CHUNK_SIZE
        return fn(chunk_rng(seed, c), start, min(CHUNK_SIZE, n_samples - start))

    if workers == 1 or n_chunks == 1:
        parts = [one(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(n_chunks)))
    total = parts[0].copy()
    for part in parts[1:]:
        total += part
    return total


def sample_pair_overlaps(
    rng: np.random.Generator, p: RateParams, g: PairGeometry, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` i.i.d. (O1_{n,n+j}, O2_{m,m+k}) pairs."""
    pos = sorted(set(g.offsets()))
    gaps = [_erlang(rng, b - a, p.lam, size) for a, b in zip(pos, pos[1:])]
    arrival = {pos[0]: np.zeros(size)}
    for (a, b), gap in zip(zip(pos, pos[1:]), gaps):
        arrival[b] = arrival[a] + gap
    s1 = {q: _exponential(rng, p.mu, size) for q in pos}
    c, d = g.delta, g.delta + g.k
    s2 = {q: _exponential(rng, p.mu, size) for q in (c, d)}
    d1 = {q: arrival[q] + s1[q] for q in pos}
    o1 = _overlap(arrival[0], arrival[g.j], d1[0], d1[g.j])
    o2 = _overlap(d1[c], d1[d], d1[c] + s2[c], d1[d] + s2[d])
    return o1, o2


def sample_same_pair_overlaps(
    rng: np.random.Generator, p: RateParams, k: int, n_stations: int, size: int
) -> np.ndarray:
    """Overlaps of (n, n+k) at each of ``n_stations`` stations, shape (N, size)."""
    gap = _erlang(rng, k, p.lam, size)
    s_first = _exponential(rng, p.mu, (n_stations, size))
    s_second = _exponential(rng, p.mu, (n_stations, size))
    dep_first = np.vstack([np.zeros(size), np.cumsum(s_first, axis=0)])
    dep_second = np.vstack([gap, gap + np.cumsum(s_second, axis=0)])
    return _overlap(dep_first[:-1], dep_second[:-1], dep_first[1:], dep_second[1:])


def estimate_cross_pair_tail(
    p: RateParams,
    g: PairGeometry,
    x: float,
    y: float,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> TailEstimate:
    classify_case(g)

    def chunk(rng, start, size):
        o1, o2 = sample_pair_overlaps(rng, p, g, size)
        return np.array([np.count_nonzero((o1 > x) & (o2 > y))], dtype=np.int64)

    hits = _run_chunks(n_samples, seed, workers, chunk)
    return _binomial(int(hits[0]), n_samples, seed)


def estimate_sum_tail(
    p: RateParams, k: int, ell: float, n_samples: int, seed: int, workers: int = 1
) -> TailEstimate:
    def chunk(rng, start, size):
        o = sample_same_pair_overlaps(rng, p, k, 2, size)
        return np.array([np.count_nonzero(o[0] + o[1] > ell)], dtype=np.int64)

    hits = _run_chunks(n_samples, seed, workers, chunk)
    return _binomial(int(hits[0]), n_samples, seed)


def estimate_joint_tail(
    p: RateParams, k: int, xs: Sequence[float], n_samples: int, seed: int, workers: int = 1
) -> TailEstimate:
    """P(O^(i) > xs[i] for every station i) for the same pair (n, n+k)."""
    thresholds = np.asarray(xs, dtype=float)[:, None]

    def chunk(rng, start, size):
        o = sample_same_pair_overlaps(rng, p, k, thresholds.shape[0], size)
        return np.array([np.count_nonzero(np.all(o > thresholds, axis=0))], dtype=np.int64)

    hits = _run_chunks(n_samples, seed, workers, chunk)
    return _binomial(int(hits[0]), n_samples, seed)


@dataclass(frozen=True)
class SampleMoments:
    estimate: MomentSet
    stderr: MomentSet  # batch-means standard error of each field
    n: int
    seed: int


_MOMENT_FIELDS = ("e1", "e2", "var1", "var2", "cov", "e12")


def _moments_from_sums(s: np.ndarray) -> np.ndarray:
    """Rows of [count, sum o1, sum o2, sum o1^2, sum o2^2, sum o1 o2] to
    rows of (e1, e2, var1, var2, cov, e12)."""
    cnt = s[..., 0]
    m1, m2 = s[..., 1] / cnt, s[..., 2] / cnt
    q1, q2, q12 = s[..., 3] / cnt, s[..., 4] / cnt, s[..., 5] / cnt
    return np.stack([m1, m2, q1 - m1**2, q2 - m2**2, q12 - m1 * m2, q12], axis=-1)


def estimate_moments(
    p: RateParams, k: int, n_samples: int, seed: int, workers: int = 1
) -> SampleMoments:
    if n_samples < N_BATCHES:
        raise ValueError(f"need at least {N_BATCHES} samples for batch means")

    def chunk(rng, start, size):
        o = sample_same_pair_overlaps(rng, p, k, 2, size)
        batch = (np.arange(start, start + size, dtype=np.int64) * N_BATCHES) // n_samples
        cols = (np.ones(size), o[0], o[1], o[0] ** 2, o[1] ** 2, o[0] * o[1])
        return np.stack([np.bincount(batch, weights=c, minlength=N_BATCHES) for c in cols], axis=1)

    sums = _run_chunks(n_samples, seed, workers, chunk)
    overall = _moments_from_sums(sums.sum(axis=0))
    per_batch = _moments_from_sums(sums)
    se = per_batch.std(axis=0, ddof=1) / math.sqrt(N_BATCHES)
    return SampleMoments(
        estimate=MomentSet(**dict(zip(_MOMENT_FIELDS, map(float, overall)))),
        stderr=MomentSet(**dict(zip(_MOMENT_FIELDS, map(float, se)))),
        n=n_samples,
        seed=seed,
    )


@dataclass(frozen=True)
class ConjectureReport:
    estimate: TailEstimate
    conjectured: float
    z_score: float


def conjecture_check(
    p: RateParams, k: int, xs: Sequence[float], n_samples: int, seed: int, workers: int = 1
) -> ConjectureReport:
    xs = list(xs)
    if len(xs) < 3:
        raise ValueError("N <= 2 stations is covered by the proven joint tail; need N >= 3")
    conj = analytic.conjecture_joint_tail(p, k, xs)
    est = estimate_joint_tail(p, k, xs, n_samples, seed, workers)
    return ConjectureReport(est, conj, est.z(conj))


def estimate_cross_pair_tail_trajectory(
    p: RateParams, g: PairGeometry, x: float, y: float, n_customers: int, seed: int
) -> TailEstimate:
    """Scan one long trajectory for every window with the geometry of ``g``."""
    classify_case(g)
    lo = min(g.offsets())
    span = max(g.offsets()) - lo
    count = n_customers - span
    if count < 1:
        raise ValueError("trajectory shorter than the geometry")
    t = simulate_tandem(p, n_customers, 2, seed)
    first = -lo  # index of customer n in the first window
    o1 = trajectory_overlaps(t, 1, first, g.j, count)
    o2 = trajectory_overlaps(t, 2, first + g.delta, g.k, count)
    return _binomial(int(np.count_nonzero((o1 > x) & (o2 > y))), count, seed)
