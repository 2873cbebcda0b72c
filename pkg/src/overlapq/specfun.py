"""Integer-order incomplete gamma and the exponential-weighted power integral.

Orders are positive integers throughout, so every quantity has a finite
sum representation; no general special-function library is needed.
"""

from __future__ import annotations

import math

_MAX_FACTORIAL_ORDER = 170  # (s-1)! overflows a double beyond this
_SERIES_RTOL = 1e-16
_MAX_TERMS = 100_000


def _check(s: int, x: float) -> None:
    if isinstance(s, bool) or not isinstance(s, int) or s < 1:
        raise ValueError(f"order must be a positive integer, got {s!r}")
    if not x >= 0:
        raise ValueError(f"argument must be >= 0, got {x!r}")


def regularized_gamma_p(s: int, x: float) -> float:
    """Erlang(s, 1) CDF at ``x``: gamma(s, x) / Gamma(s)."""
    _check(s, x)
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1:
        # x^s e^-x / s! * sum_n x^n / ((s+1)...(s+n)); all terms positive
        term = 1.0
        total = 1.0
        for i in range(1, _MAX_TERMS):
            term *= x / (s + i)
            total += term
            if term < _SERIES_RTOL * total:
                break
        log_lead = s * math.log(x) - x - math.lgamma(s + 1)
        return min(1.0, math.exp(log_lead) * total)
    # upper tail e^-x sum_{i<s} x^i / i!, accumulated in log space
    log_x = math.log(x)
    q = 0.0
    for i in range(s):
        q += math.exp(i * log_x - x - math.lgamma(i + 1))
    return max(0.0, 1.0 - q)


def lower_incomplete_gamma_int(s: int, x: float) -> float:
    """gamma(s, x) = integral of t^(s-1) e^-t over [0, x]."""
    _check(s, x)
    if s > _MAX_FACTORIAL_ORDER:
        raise OverflowError(
            f"(s-1)! overflows for s={s}; use regularized_gamma_p instead"
        )
    return math.factorial(s - 1) * regularized_gamma_p(s, x)


def exp_weighted_power_integral(s: int, a: float, x: float) -> float:
    """Integral of t^(s-1) e^(a t) over [0, x] for integer ``s`` and any real ``a``.

    Positive ``a`` uses the all-positive series
    sum_m a^m x^(s+m) / (m! (s+m)). Negative ``a`` reduces to the lower
    incomplete gamma function, except for |a| x <= 1 where the same series
    alternates with quickly shrinking terms and avoids dividing by |a|^s.
    """
    _check(s, x)
    if not math.isfinite(a):
        raise ValueError(f"rate must be finite, got {a!r}")
    if x == 0:
        return 0.0
    if a == 0:
        return x**s / s
    if a < 0 and -a * x > 1:
        b = -a
        # gamma(s, b x) / b^s with (s-1)!/b^s folded into logs
        log_scale = math.lgamma(s) - s * math.log(b)
        return math.exp(log_scale) * regularized_gamma_p(s, b * x)
    ax = a * x
    term = 1.0  # (ax)^m / m!
    total = 1.0 / s
    for m in range(1, _MAX_TERMS):
        term *= ax / m
        contrib = term / (s + m)
        total += contrib
        if abs(contrib) < _SERIES_RTOL * abs(total) and m > abs(ax):
            break
    return x**s * total


def alternating_closed_form(s: int, a: float, x: float) -> float:
    """Integration-by-parts form of the same integral, for ``a > 0``.

    Cancels badly once ``s`` or ``a x`` grows; kept as a cross-check at
    small arguments only.
    """
    _check(s, x)
    if a <= 0:
        raise ValueError("closed form needs a > 0")
    f = math.factorial(s - 1)
    total = 0.0
    for i in range(s):
        total += (-1) ** i * math.exp(a * x) * f / (math.factorial(s - 1 - i) * a ** (i + 1)) * x ** (s - 1 - i)
    return total - (-1) ** (s - 1) * f / a**s
