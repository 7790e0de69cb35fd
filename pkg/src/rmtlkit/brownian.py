"""Numerics for the supremum of Brownian motion on [0, 1].

Covers the survival function of sup|M(t)| via its alternating series, its
quantiles by bisection, the crossing probability of a level by a drifted
Brownian motion, and the safeguarded Newton solve for the drift that
achieves a target crossing probability.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.special import log_ndtr, ndtr

from .errors import DataValidationError, NumericError, SolverError


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation control for the supremum-distribution series."""

    eps: float = 1e-10
    max_terms: int = 1_000_000

    def __post_init__(self):
        if not self.eps > 0:
            raise DataValidationError(f"eps must be positive, got {self.eps!r}")
        if self.max_terms < 1:
            raise DataValidationError("max_terms must be at least 1")


_DEFAULT_SERIES = SeriesConfig()


def series_term_count(x: float, eps: float) -> int:
    """Minimum number of series terms for permissible error eps.

    Computed as ceil((x*sqrt(2)/pi) * sqrt(log(1/(pi*eps)) - 1/2)), floored
    at 1. Outside eps in (0, 1/pi) the rule is undefined; fall back to 1
    with a warning, since term-magnitude stopping still bounds the error.
    """
    if x <= 0:
        raise DataValidationError(f"x must be positive, got {x!r}")
    if not 0.0 < eps < 1.0 / math.pi:
        warnings.warn(
            f"eps={eps!r} outside (0, 1/pi); using m=1 and relying on "
            "term-magnitude stopping",
            stacklevel=2,
        )
        return 1
    inner = math.log(1.0 / (math.pi * eps)) - 0.5
    if inner <= 0.0:
        return 1
    return max(math.ceil(x * math.sqrt(2.0) / math.pi * math.sqrt(inner)), 1)


def _term_magnitude(a: int, x: float) -> float:
    return math.exp(-math.pi**2 * (2 * a + 1) ** 2 / (8.0 * x * x)) / (2 * a + 1)


def sup_abs_bm_sf(x: float, cfg: SeriesConfig = _DEFAULT_SERIES) -> float:
    """P[sup of |M(t)| over t in [0,1] > x] for standard Brownian motion M.

    Sums the alternating series to at least the term count from
    ``series_term_count`` and further until the next term's magnitude
    drops below cfg.eps; the result is clamped into [0, 1].
    """
    if x <= 0:
        raise DataValidationError(f"x must be positive, got {x!r}")
    m = series_term_count(x, cfg.eps)
    total = 0.0
    a = 0
    while a < cfg.max_terms:
        sign = 1.0 if a % 2 == 0 else -1.0
        total += sign * _term_magnitude(a, x)
        a += 1
        if a >= m and _term_magnitude(a, x) < cfg.eps:
            break
    else:
        raise NumericError(f"series did not converge within {cfg.max_terms} terms")
    return min(max(1.0 - (4.0 / math.pi) * total, 0.0), 1.0)


def sup_abs_bm_quantile(p: float, cfg: SeriesConfig = _DEFAULT_SERIES) -> float:
    """Value x with sup_abs_bm_sf(x) = p, to within 1e-9 on the probability."""
    if not 0.0 < p < 1.0:
        raise DataValidationError(f"p must be in (0, 1), got {p!r}")
    lo, hi = 1e-8, 1.0
    expansions = 0
    while sup_abs_bm_sf(hi, cfg) > p:
        hi *= 2.0
        expansions += 1
        if expansions > 200:
            raise NumericError("quantile bracket expansion failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sup_abs_bm_sf(mid, cfg) > p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    x = 0.5 * (lo + hi)
    if abs(sup_abs_bm_sf(x, cfg) - p) >= 1e-9:
        raise NumericError(f"quantile solve did not reach 1e-9 at p={p}")
    return x


def drift_crossing_prob(level: float, drift: float) -> float:
    """Probability that Brownian motion with the given drift exceeds level.

    Phibar(level - drift) + exp(2*level*drift) * Phibar(level + drift),
    with the product term evaluated in log space so large level*drift
    cannot overflow. Clamped into [0, 1].
    """
    u, x = float(level), float(drift)
    val = float(ndtr(x - u)) + math.exp(2.0 * u * x + float(log_ndtr(-(u + x))))
    return min(max(val, 0.0), 1.0)


def drift_crossing_prob_deriv(level: float, drift: float) -> float:
    """Derivative of drift_crossing_prob in the drift argument.

    Direct differentiation gives phi(u-x) + 2u*exp(2ux)*Phibar(u+x)
    - exp(2ux)*phi(u+x); the two density terms cancel identically because
    exp(2ux)*phi(u+x) = phi(u-x), leaving the single positive term.
    """
    u, x = float(level), float(drift)
    return 2.0 * u * math.exp(2.0 * u * x + float(log_ndtr(-(u + x))))


def solve_crossing_drift(
    level: float,
    target: float,
    drift0: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> float:
    """Drift at which the crossing probability equals target.

    Newton iteration from drift0 (default 0), safeguarded by a maintained
    bracket: any step leaving the bracket is replaced by bisection. The
    crossing probability is strictly increasing in the drift for level > 0,
    so the root is unique.
    """
    if level <= 0:
        raise DataValidationError(f"level must be positive, got {level!r}")
    if not 0.0 < target < 1.0:
        raise DataValidationError(f"target must be in (0, 1), got {target!r}")

    x = 0.0 if drift0 is None else float(drift0)
    f0 = drift_crossing_prob(level, x) - target
    lo, hi, step = x, x, 1.0
    if f0 < 0:
        for _ in range(200):
            hi = lo + step
            if drift_crossing_prob(level, hi) - target >= 0:
                break
            lo, step = hi, step * 2.0
        else:
            raise SolverError(f"target {target} unreachable: no upper bracket found")
    elif f0 > 0:
        for _ in range(200):
            lo = hi - step
            if drift_crossing_prob(level, lo) - target <= 0:
                break
            hi, step = lo, step * 2.0
        else:
            raise SolverError(f"target {target} unreachable: no lower bracket found")
    else:
        return x

    x = min(max(x, lo), hi)
    for _ in range(max_iter):
        f = drift_crossing_prob(level, x) - target
        if abs(f) < tol:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        deriv = drift_crossing_prob_deriv(level, x)
        x_new = x - f / deriv if deriv > 0 else None
        if x_new is None or not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        x = x_new
    raise SolverError(f"drift solve did not converge within {max_iter} iterations")
