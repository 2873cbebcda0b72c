"""Rate parameters, pair geometry and the nine-way case classifier."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from overlapq.errors import NonFinite, NonPositiveRate, UnclassifiableGeometry

# |lambda - mu| inside this relative band is treated as lambda == mu
EQUAL_RATE_RTOL = 1e-9


@dataclass(frozen=True)
class RateParams:
    """Arrival rate ``lam``, per-station service rate ``mu``."""

    lam: float
    mu: float
    alpha: float = field(init=False)

    def __post_init__(self) -> None:
        for name, v in (("lambda", self.lam), ("mu", self.mu)):
            if not math.isfinite(v):
                raise NonFinite(f"{name} must be finite, got {v!r}")
            if v <= 0:
                raise NonPositiveRate(f"{name} must be > 0, got {v!r}")
        object.__setattr__(self, "alpha", self.lam / (self.lam + self.mu))

    @property
    def regime(self) -> Regime:
        diff = self.lam - self.mu
        if diff == 0 or abs(diff) <= EQUAL_RATE_RTOL * max(self.lam, self.mu):
            return Regime.LAMBDA_EQUAL
        return Regime.LAMBDA_GREATER if diff > 0 else Regime.LAMBDA_LESS


def validate_params(lam: float, mu: float) -> RateParams:
    return RateParams(float(lam), float(mu))


@dataclass(frozen=True)
class PairGeometry:
    """Station 1 observes customers (n, n+j); station 2 observes (m, m+k)."""

    j: int
    k: int
    delta: int = 0
    n: int = 0

    def __post_init__(self) -> None:
        for name in ("j", "k", "delta", "n"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise TypeError(f"{name} must be an int, got {v!r}")
        if self.j < 1 or self.k < 1:
            raise ValueError(f"gaps must be >= 1, got j={self.j}, k={self.k}")

    @property
    def m(self) -> int:
        return self.n + self.delta

    @classmethod
    def same_pair(cls, k: int, n: int = 0) -> PairGeometry:
        return cls(j=k, k=k, delta=0, n=n)

    def offsets(self) -> tuple[int, int, int, int]:
        """Positions of n, n+j, m, m+k relative to n."""
        return 0, self.j, self.delta, self.delta + self.k


@dataclass(frozen=True)
class Threshold:
    x: float = 0.0
    y: float = 0.0
    ell: float = 0.0

    def __post_init__(self) -> None:
        for name in ("x", "y", "ell"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0:
                raise ValueError(f"threshold {name} must be >= 0, got {v!r}")


class Ordering(enum.Enum):
    """Relative order of the observed customers.

    Names follow the actual index positions of the station-1 pair
    (n, n+j) and the station-2 pair (m, m+k).
    """

    SAME_PAIR_SAME_GAP = 1          # n = m, j = k
    SAME_START_J_LESS_K = 2         # n = m, j < k
    INTERLEAVED_N_M_NJ_MK = 3       # n < m < n+j < m+k
    DISJOINT_NJ_BEFORE_M = 4        # n < n+j < m < m+k
    NESTED_MK_INSIDE_NJ = 5         # n < m < m+k < n+j
    SAME_START_J_GREATER_K = 6      # n = m, j > k
    INTERLEAVED_M_N_MK_NJ = 7       # m < n < m+k < n+j
    DISJOINT_MK_BEFORE_N = 8        # m < m+k < n < n+j
    NESTED_NJ_INSIDE_MK = 9         # m < n < n+j < m+k

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def table_label(self) -> str:
        """Row heading used by the published tables."""
        return _TABLE_LABELS[self]


_LABELS = {
    Ordering.SAME_PAIR_SAME_GAP: "n=m, j=k",
    Ordering.SAME_START_J_LESS_K: "n=m, j<k",
    Ordering.INTERLEAVED_N_M_NJ_MK: "n<m<n+j<m+k",
    Ordering.DISJOINT_NJ_BEFORE_M: "n<n+j<m<m+k",
    Ordering.NESTED_MK_INSIDE_NJ: "n<m<m+k<n+j",
    Ordering.SAME_START_J_GREATER_K: "n=m, j>k",
    Ordering.INTERLEAVED_M_N_MK_NJ: "m<n<m+k<n+j",
    Ordering.DISJOINT_MK_BEFORE_N: "m<m+k<n<n+j",
    Ordering.NESTED_NJ_INSIDE_MK: "m<n<n+j<m+k",
}

_TABLE_LABELS = {
    **_LABELS,
    Ordering.INTERLEAVED_M_N_MK_NJ: "m<n<m+j<n+k",
    Ordering.DISJOINT_MK_BEFORE_N: "m<m+j<n<n+k",
    Ordering.NESTED_NJ_INSIDE_MK: "m<n<n+k<m+j",
}


class Regime(enum.Enum):
    LAMBDA_GREATER = "lambda>mu"
    LAMBDA_EQUAL = "lambda=mu"
    LAMBDA_LESS = "lambda<mu"


@dataclass(frozen=True)
class CaseId:
    ordering: Ordering
    regime: Regime | None = None

    @property
    def number(self) -> int:
        return self.ordering.value

    def __str__(self) -> str:
        s = f"case {self.number} ({self.ordering.label})"
        return f"{s} [{self.regime.value}]" if self.regime else s


def classify_ordering(j: int, k: int, delta: int) -> Ordering:
    """Map the gap pattern (j, k, delta = m - n) to one of the nine orderings."""
    if j < 1 or k < 1:
        raise ValueError(f"gaps must be >= 1, got j={j}, k={k}")
    end2 = delta + k
    if delta == 0:
        if j == k:
            return Ordering.SAME_PAIR_SAME_GAP
        return Ordering.SAME_START_J_LESS_K if j < k else Ordering.SAME_START_J_GREATER_K
    if delta == j or end2 == 0 or end2 == j:
        raise UnclassifiableGeometry(
            f"boundary coincidence at j={j}, k={k}, m-n={delta}"
        )
    if delta > 0:
        if delta > j:
            return Ordering.DISJOINT_NJ_BEFORE_M
        return Ordering.INTERLEAVED_N_M_NJ_MK if end2 > j else Ordering.NESTED_MK_INSIDE_NJ
    if end2 < 0:
        return Ordering.DISJOINT_MK_BEFORE_N
    return Ordering.INTERLEAVED_M_N_MK_NJ if end2 < j else Ordering.NESTED_NJ_INSIDE_MK


def classify_case(geometry: PairGeometry, params: RateParams | None = None) -> CaseId:
    ordering = classify_ordering(geometry.j, geometry.k, geometry.delta)
    regime = None
    if ordering is Ordering.SAME_START_J_LESS_K and params is not None:
        regime = params.regime
    return CaseId(ordering, regime)
