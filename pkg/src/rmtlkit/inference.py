"""Two-sample tests for the RMTL difference.

The basic test (Diff) refers the standardized difference to a normal law.
The supremum test (sDiff) tracks the partial difference process over the
pooled event-time grid and refers its normalized supremum to the
distribution of sup|M(t)| for standard Brownian motion M.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr

from .brownian import SeriesConfig, sup_abs_bm_sf
from .cif import cif_estimate
from .data_model import EventCode, TwoGroupSample, build_risk_table
from .errors import DataValidationError, DegenerateDataError
from .rmtl import RmtlDifference, _check_tau, rmtl_difference


class TestMethod(str, Enum):
    DIFF = "diff"
    SDIFF = "sdiff"


@dataclass(frozen=True)
class TestResult:
    method: TestMethod
    statistic: float
    p_value: float
    delta: RmtlDifference
    alpha: float
    reject: bool


@dataclass(frozen=True)
class PartialDifferenceProcess:
    """Partial RMTL-difference process on the pooled event-time grid.

    ``values[r]`` is the partial difference accumulated through the grid
    interval starting at ``times[r]``; ``widths[r]`` is that interval's
    length, with the final interval clipped at tau. Variances are the
    per-group CIF variances evaluated at the grid times.
    """

    times: np.ndarray
    widths: np.ndarray
    values: np.ndarray
    var_first: np.ndarray
    var_second: np.ndarray
    tau: float
    rho: float
    sigma_tau: float


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DataValidationError(f"alpha must be in (0, 1), got {alpha!r}")
    return float(alpha)


def diff_test(
    sample: TwoGroupSample,
    tau: float,
    alpha: float = 0.05,
    strict: bool = False,
) -> TestResult:
    """Normal-approximation test of zero RMTL difference."""
    alpha = _check_alpha(alpha)
    delta = rmtl_difference(sample, tau, strict=strict, require_events=False)
    if delta.se == 0.0:
        raise DegenerateDataError(
            "zero standard error: no usable events of interest in either group"
        )
    z = delta.delta / delta.se
    p = min(2.0 * float(ndtr(-abs(z))), 1.0)
    return TestResult(
        method=TestMethod.DIFF,
        statistic=z,
        p_value=p,
        delta=delta,
        alpha=alpha,
        reject=p < alpha,
    )


def partial_process(
    sample: TwoGroupSample,
    tau: float,
    rho: float = 0.5,
    strict: bool = False,
) -> PartialDifferenceProcess:
    """Partial difference process, its grid, and the pooled normalizer.

    The grid pools the distinct event times of both causes from both
    groups, restricted to strictly below tau (a knot at tau would start a
    zero-width interval). Each CIF and its variance are evaluated on the
    grid by right-continuity.
    """
    if not 0.0 <= rho <= 1.0:
        raise DataValidationError(f"rho must be in [0, 1], got {rho!r}")
    tables = [build_risk_table(records) for records in sample.split()]
    cifs = [cif_estimate(rt, EventCode.INTEREST) for rt in tables]
    for cif in cifs:
        tau = _check_tau(cif, tau, strict)
    grid = np.union1d(tables[0].times, tables[1].times)
    grid = grid[grid < tau]
    if len(grid) == 0:
        raise DegenerateDataError(f"no event times before tau={tau:g}")
    widths = np.diff(np.concatenate((grid, [tau])))
    first, second = cifs
    values = np.cumsum((second.value_at(grid) - first.value_at(grid)) * widths)
    var_first = first.variance_at(grid)
    var_second = second.variance_at(grid)
    sigma = _sigma_tau(widths, var_first + var_second, rho)
    return PartialDifferenceProcess(
        times=grid,
        widths=widths,
        values=values,
        var_first=var_first,
        var_second=var_second,
        tau=float(tau),
        rho=float(rho),
        sigma_tau=sigma,
    )


def _sigma_tau(widths: np.ndarray, var_sum: np.ndarray, rho: float) -> float:
    """Normalizer combining interval lengths and summed CIF variances.

    With s_i = w_i * sqrt(v_i), the defining double sum
    sum(s_i^2) + 2*rho*sum_{i<i'} s_i*s_i' equals
    (1 - rho)*sum(s_i^2) + rho*(sum(s_i))^2, which costs O(K).
    """
    s = widths * np.sqrt(var_sum)
    sq = float(np.dot(s, s))
    total = float(np.sum(s))
    return float(np.sqrt(max((1.0 - rho) * sq + rho * total * total, 0.0)))


def sdiff_sigma(process: PartialDifferenceProcess, rho: float | None = None) -> float:
    """Normalizer sigma(tau) of the partial process; errors when zero."""
    rho = process.rho if rho is None else rho
    if not 0.0 <= rho <= 1.0:
        raise DataValidationError(f"rho must be in [0, 1], got {rho!r}")
    sigma = _sigma_tau(process.widths, process.var_first + process.var_second, rho)
    if sigma == 0.0:
        raise DegenerateDataError(
            "zero normalizer: all CIF variances vanish on the grid"
        )
    return sigma


def sdiff_test(
    sample: TwoGroupSample,
    tau: float,
    alpha: float = 0.05,
    rho: float = 0.5,
    eps: float = 1e-10,
    strict: bool = False,
) -> TestResult:
    """Supremum test of zero RMTL difference over the whole window."""
    alpha = _check_alpha(alpha)
    process = partial_process(sample, tau, rho=rho, strict=strict)
    sigma = sdiff_sigma(process)
    statistic = float(np.max(np.abs(process.values))) / sigma
    if statistic == 0.0:
        p = 1.0
    else:
        p = sup_abs_bm_sf(statistic, SeriesConfig(eps=eps))
    delta = rmtl_difference(sample, tau, strict=False, require_events=False)
    return TestResult(
        method=TestMethod.SDIFF,
        statistic=statistic,
        p_value=p,
        delta=delta,
        alpha=alpha,
        reject=p < alpha,
    )
