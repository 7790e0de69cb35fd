"""Monte Carlo engine: scenario-driven data generation and power studies.

Scenarios describe each group by two piecewise-Weibull sub-distributions
(event of interest and competing event) whose masses sum to 1, plus a
uniform censoring law given either as an upper bound or as a target
censoring rate to calibrate. Replications run on independent counter-based
random streams, so reports are bit-identical for any worker count.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data_model import EventCode, SubjectRecord, TwoGroupSample
from .errors import (
    CalibrationError,
    DataValidationError,
    DegenerateDataError,
    NumericError,
    SmallSampleWarning,
)
from .inference import TestMethod, diff_test, sdiff_test
from .rmtl import default_tau

_CALIBRATION_SEED = 1_000_003
_CALIBRATION_DRAWS = 100_000

TAU_RULE = "min over groups of the last observed event-of-interest time"


@dataclass(frozen=True)
class WeibullSegment:
    start: float
    shape: float
    scale: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and self.start >= 0):
            raise DataValidationError(f"segment start must be >= 0, got {self.start!r}")
        if not (math.isfinite(self.shape) and self.shape > 0):
            raise DataValidationError(f"segment shape must be > 0, got {self.shape!r}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise DataValidationError(f"segment scale must be > 0, got {self.scale!r}")


@dataclass(frozen=True)
class PiecewiseWeibullCif:
    """Sub-distribution I(t) = mass * F(t) with piecewise-Weibull F.

    F is assembled on the cumulative-hazard scale so it is continuous and
    strictly increasing across segment boundaries regardless of the
    per-segment shapes and scales.
    """

    mass: float
    segments: tuple[WeibullSegment, ...]

    def __post_init__(self):
        if not 0.0 < self.mass <= 1.0:
            raise DataValidationError(f"mass must be in (0, 1], got {self.mass!r}")
        if not self.segments:
            raise DataValidationError("at least one Weibull segment required")
        starts = [s.start for s in self.segments]
        if starts[0] != 0.0:
            raise DataValidationError("first segment must start at 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise DataValidationError("segment starts must be strictly ascending")

    def _pieces(self):
        # cached: (starts, shapes, scales, hazard at own start, offset at start)
        cached = self.__dict__.get("_piece_arrays")
        if cached is None:
            starts = np.array([s.start for s in self.segments])
            shapes = np.array([s.shape for s in self.segments])
            scales = np.array([s.scale for s in self.segments])
            edge = (starts / scales) ** shapes
            nxt = (np.append(starts[1:], 0.0) / scales) ** shapes
            offsets = np.concatenate(([0.0], np.cumsum((nxt - edge)[:-1])))
            cached = (starts, shapes, scales, edge, offsets)
            object.__setattr__(self, "_piece_arrays", cached)
        return cached

    def cumulative_hazard(self, t):
        t = np.asarray(t, dtype=float)
        starts, shapes, scales, edge, offsets = self._pieces()
        seg = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, None)
        tt = np.clip(t, 0.0, None)
        return offsets[seg] + (tt / scales[seg]) ** shapes[seg] - edge[seg]

    def cdf(self, t):
        """Conditional event-time CDF F(t) (mass not applied)."""
        return -np.expm1(-self.cumulative_hazard(t))

    def cif(self, t):
        """Sub-distribution value mass * F(t)."""
        return self.mass * self.cdf(t)

    def inverse_cdf(self, u, tol: float = 1e-10):
        """Invert F by monotone bisection on the piecewise segments."""
        u = np.asarray(u, dtype=float)
        if np.any((u < 0.0) | (u >= 1.0)):
            raise DataValidationError("uniform draws must lie in [0, 1)")
        lo = np.zeros_like(u)
        hi_scalar = 2.0 * max(
            max(s.start for s in self.segments), max(s.scale for s in self.segments)
        )
        hi = np.full_like(u, hi_scalar)
        for _ in range(300):
            short = self.cdf(hi) < u
            if not np.any(short):
                break
            hi[short] *= 2.0
        else:
            raise NumericError("inverse CDF bracket expansion failed")
        for _ in range(500):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) <= tol:
                break
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class GroupSpec:
    interest: PiecewiseWeibullCif
    competing: PiecewiseWeibullCif
    n: int

    def __post_init__(self):
        if abs(self.interest.mass + self.competing.mass - 1.0) > 1e-9:
            raise DataValidationError(
                "interest and competing masses must sum to 1, got "
                f"{self.interest.mass} + {self.competing.mass}"
            )
        if self.n < 2:
            raise DataValidationError(f"group size must be >= 2, got {self.n}")


@dataclass(frozen=True)
class CensoringSpec:
    """Uniform censoring: explicit upper bound, or a rate target to calibrate."""

    target: float | None = None
    bound: float | None = None

    def __post_init__(self):
        if self.target is not None and self.bound is not None:
            raise DataValidationError("censoring: give either target or c, not both")
        if self.target is not None and not 0.0 <= self.target <= 0.9:
            raise DataValidationError(
                f"censoring target must be in [0, 0.9], got {self.target!r}"
            )
        if self.bound is not None and not self.bound > 0:
            raise DataValidationError(f"censoring bound must be > 0, got {self.bound!r}")

    @property
    def none_requested(self) -> bool:
        return self.bound is None and (self.target is None or self.target == 0.0)


@dataclass(frozen=True)
class ScenarioSpec:
    groups: tuple[GroupSpec, GroupSpec]
    censoring: CensoringSpec = CensoringSpec()
    label: str = ""

    def __post_init__(self):
        if len(self.groups) != 2:
            raise DataValidationError("a scenario needs exactly two groups")


@dataclass(frozen=True)
class MethodSummary:
    method: TestMethod
    rejections: int
    valid_reps: int
    degenerate_reps: int
    rate: float
    mc_se: float


@dataclass(frozen=True)
class SimulationReport:
    scenario_label: str
    methods: tuple[MethodSummary, ...]
    reps: int
    degenerate_reps: int
    seed: int
    alpha: float
    rho: float
    tau_rule: str
    censoring_bounds: tuple[float, float] | None

    def to_dict(self) -> dict:
        return {
            "scenario_label": self.scenario_label,
            "reps": self.reps,
            "degenerate_reps": self.degenerate_reps,
            "seed": self.seed,
            "alpha": self.alpha,
            "rho": self.rho,
            "tau_rule": self.tau_rule,
            "censoring_bounds": (
                list(self.censoring_bounds) if self.censoring_bounds else None
            ),
            "methods": {
                m.method.value: {
                    "rejections": m.rejections,
                    "valid_reps": m.valid_reps,
                    "degenerate_reps": m.degenerate_reps,
                    "rate": m.rate,
                    "mc_se": m.mc_se,
                }
                for m in self.methods
            },
        }


def sample_events(group: GroupSpec, rng: np.random.Generator, n: int | None = None):
    """Draw (times, codes) for one group: cause by the interest mass, time
    by inverse transform from that cause's conditional CDF."""
    n = group.n if n is None else n
    is_interest = rng.random(n) < group.interest.mass
    u = rng.random(n)
    times = np.empty(n, dtype=float)
    if is_interest.any():
        times[is_interest] = group.interest.inverse_cdf(u[is_interest])
    if (~is_interest).any():
        times[~is_interest] = group.competing.inverse_cdf(u[~is_interest])
    codes = np.where(is_interest, int(EventCode.INTEREST), int(EventCode.COMPETING))
    return times, codes


def apply_censoring(times, codes, bound: float, rng: np.random.Generator):
    """Censor with C ~ Uniform(0, bound); a tie T == C stays an event."""
    if not bound > 0:
        raise DataValidationError(f"censoring bound must be > 0, got {bound!r}")
    c = rng.uniform(0.0, bound, len(times))
    censored = c < times
    observed = np.where(censored, c, times)
    new_codes = np.where(censored, int(EventCode.CENSORED), codes)
    return observed, new_codes


def _censoring_rate(event_times: np.ndarray, bound: float) -> float:
    # P(C < T | T) = min(T, c)/c for C ~ U(0, c), so the rate is exact in C
    return float(np.mean(np.minimum(event_times, bound)) / bound)


def calibrate_censoring(
    scn: ScenarioSpec, target: float, draws: int = _CALIBRATION_DRAWS
) -> tuple[float, float] | None:
    """Per-group uniform bounds that hit the target censoring rate.

    Both groups are set to the same rate (so a scenario with different
    event-time laws gets different bounds). Uses a fixed calibration seed,
    10^5 event-time draws per group, and bisection on the monotone rate
    function until within +/-5e-4 of the target.
    """
    if not 0.0 <= target <= 0.9:
        raise CalibrationError(f"target rate must be in [0, 0.9], got {target!r}")
    if target == 0.0:
        return None
    bounds = []
    for k, group in enumerate(scn.groups):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=_CALIBRATION_SEED, spawn_key=(k,))
        )
        event_times, _ = sample_events(group, rng, draws)
        lo, hi = 1e-12, float(np.max(event_times))
        expansions = 0
        while _censoring_rate(event_times, hi) > target:
            hi *= 2.0
            expansions += 1
            if expansions > 200:
                raise CalibrationError(f"cannot reach target rate {target}")
        c = hi
        for _ in range(200):
            c = 0.5 * (lo + hi)
            rate = _censoring_rate(event_times, c)
            if abs(rate - target) <= 5e-4:
                break
            if rate > target:
                lo = c
            else:
                hi = c
        else:
            raise CalibrationError(f"calibration did not converge for target {target}")
        bounds.append(c)
    return bounds[0], bounds[1]


def resolve_censoring(scn: ScenarioSpec) -> tuple[float, float] | None:
    """Turn a scenario's censoring spec into per-group uniform bounds."""
    cen = scn.censoring
    if cen.none_requested:
        return None
    if cen.bound is not None:
        return cen.bound, cen.bound
    return calibrate_censoring(scn, cen.target)


def _replicate(scn, rep, seed, bounds):
    """Generate one replication's TwoGroupSample, or None when a group has
    no observed events of interest."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))
    records = []
    ok = True
    for k, group in enumerate(scn.groups):
        times, codes = sample_events(group, rng)
        if bounds is not None:
            times, codes = apply_censoring(times, codes, bounds[k], rng)
        if not np.any(codes == EventCode.INTEREST):
            ok = False
        label = str(k + 1)
        records.extend(
            SubjectRecord(float(t), EventCode(int(c)), label)
            for t, c in zip(times, codes)
        )
    if not ok:
        return None
    return TwoGroupSample.from_records(records)


def _run_block(scn, methods, start, stop, seed, alpha, rho, eps, bounds):
    skipped = 0
    tallies = {m: [0, 0, 0] for m in methods}  # rejections, valid, degenerate
    for rep in range(start, stop):
        sample = _replicate(scn, rep, seed, bounds)
        if sample is None:
            skipped += 1
            continue
        tau = default_tau(sample)
        for method in methods:
            try:
                if method == TestMethod.DIFF:
                    result = diff_test(sample, tau, alpha=alpha)
                else:
                    result = sdiff_test(sample, tau, alpha=alpha, rho=rho, eps=eps)
            except DegenerateDataError:
                tallies[method][2] += 1
                continue
            tallies[method][1] += 1
            if result.reject:
                tallies[method][0] += 1
    return skipped, tallies


def _normalize_methods(methods) -> tuple[TestMethod, ...]:
    if isinstance(methods, (str, TestMethod)):
        methods = [methods]
    out = tuple(TestMethod(m) for m in methods)
    if not out:
        raise DataValidationError("at least one test method required")
    return out


def run_monte_carlo(
    scn: ScenarioSpec,
    methods=(TestMethod.DIFF, TestMethod.SDIFF),
    reps: int = 5000,
    seed: int = 0,
    alpha: float = 0.05,
    rho: float = 0.5,
    eps: float = 1e-10,
    workers: int = 1,
) -> SimulationReport:
    """Replicated size/power study of the selected tests under a scenario.

    Replication r draws from an independent stream derived from (seed, r),
    making the report deterministic for any worker count. tau is chosen
    per replication as the minimum over groups of the last observed event
    of interest; replications where a group has none are excluded from the
    rate denominator and reported separately.
    """
    if reps < 1:
        raise DataValidationError(f"reps must be >= 1, got {reps}")
    if workers < 1:
        raise DataValidationError(f"workers must be >= 1, got {workers}")
    methods = _normalize_methods(methods)
    bounds = resolve_censoring(scn)

    if workers == 1:
        blocks = [_run_block(scn, methods, 0, reps, seed, alpha, rho, eps, bounds)]
    else:
        n_blocks = min(workers * 4, reps)
        edges = np.linspace(0, reps, n_blocks + 1, dtype=int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _run_block, scn, methods, int(a), int(b), seed, alpha, rho, eps,
                    bounds,
                )
                for a, b in zip(edges[:-1], edges[1:])
                if b > a
            ]
            blocks = [f.result() for f in futures]

    skipped = sum(b[0] for b in blocks)
    summaries = []
    for method in methods:
        rej = sum(b[1][method][0] for b in blocks)
        valid = sum(b[1][method][1] for b in blocks)
        degen = sum(b[1][method][2] for b in blocks)
        rate = rej / valid if valid else float("nan")
        mc_se = math.sqrt(rate * (1.0 - rate) / valid) if valid else float("nan")
        summaries.append(
            MethodSummary(
                method=method,
                rejections=rej,
                valid_reps=valid,
                degenerate_reps=degen,
                rate=rate,
                mc_se=mc_se,
            )
        )
    return SimulationReport(
        scenario_label=scn.label,
        methods=tuple(summaries),
        reps=reps,
        degenerate_reps=skipped,
        seed=seed,
        alpha=alpha,
        rho=rho,
        tau_rule=TAU_RULE,
        censoring_bounds=bounds,
    )


def observed_power_at_n(
    scn: ScenarioSpec,
    n_total: int,
    methods=(TestMethod.DIFF, TestMethod.SDIFF),
    reps: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
    rho: float = 0.5,
    eps: float = 1e-10,
    ratio: float | None = None,
    workers: int = 1,
) -> SimulationReport:
    """Rerun a scenario at a designed total sample size.

    The total is split by ``ratio`` (n2/n1; defaults to the scenario's own
    group-size ratio) with the first group rounded up.
    """
    if n_total < 4:
        raise DataValidationError(f"n_total must be >= 4, got {n_total}")
    if n_total < 20:
        import warnings

        warnings.warn(
            f"n_total={n_total} is too small for the normal approximation "
            "to be reliable",
            SmallSampleWarning,
            stacklevel=2,
        )
    r = ratio if ratio is not None else scn.groups[1].n / scn.groups[0].n
    if not r > 0:
        raise DataValidationError(f"ratio must be > 0, got {r!r}")
    n1 = math.ceil(n_total / (1.0 + r))
    n2 = n_total - n1
    if n1 < 2 or n2 < 2:
        raise DataValidationError(
            f"split n1={n1}, n2={n2} leaves a group below the minimum size 2"
        )
    resized = dataclasses.replace(
        scn,
        groups=(
            dataclasses.replace(scn.groups[0], n=n1),
            dataclasses.replace(scn.groups[1], n=n2),
        ),
    )
    return run_monte_carlo(
        resized, methods, reps=reps, seed=seed, alpha=alpha, rho=rho, eps=eps,
        workers=workers,
    )


# ---------------------------------------------------------------------------
# Scenario file handling


def _require(condition: bool, field: str, message: str):
    if not condition:
        raise DataValidationError(f"scenario field {field!r}: {message}")


def _parse_subdist(obj, path: str) -> PiecewiseWeibullCif:
    _require(isinstance(obj, dict), path, "must be an object")
    unknown = set(obj) - {"p", "segments"}
    _require(not unknown, path, f"unknown key(s) {sorted(unknown)}")
    _require("p" in obj, f"{path}.p", "is required")
    _require("segments" in obj, f"{path}.segments", "is required")
    _require(
        isinstance(obj["p"], (int, float)) and not isinstance(obj["p"], bool),
        f"{path}.p",
        "must be a number",
    )
    segs = obj["segments"]
    _require(isinstance(segs, list) and segs, f"{path}.segments", "must be a nonempty list")
    parsed = []
    for i, seg in enumerate(segs):
        spath = f"{path}.segments[{i}]"
        _require(isinstance(seg, dict), spath, "must be an object")
        unknown = set(seg) - {"start", "shape", "scale"}
        _require(not unknown, spath, f"unknown key(s) {sorted(unknown)}")
        for key in ("start", "shape", "scale"):
            _require(key in seg, f"{spath}.{key}", "is required")
            _require(
                isinstance(seg[key], (int, float)) and not isinstance(seg[key], bool),
                f"{spath}.{key}",
                "must be a number",
            )
        try:
            parsed.append(WeibullSegment(float(seg["start"]), float(seg["shape"]),
                                         float(seg["scale"])))
        except DataValidationError as exc:
            raise DataValidationError(f"scenario field {spath!r}: {exc}") from None
    try:
        return PiecewiseWeibullCif(mass=float(obj["p"]), segments=tuple(parsed))
    except DataValidationError as exc:
        raise DataValidationError(f"scenario field {path!r}: {exc}") from None


def scenario_from_dict(data: dict) -> ScenarioSpec:
    """Validate a scenario mapping, reporting the offending field on error."""
    _require(isinstance(data, dict), "<root>", "must be an object")
    unknown = set(data) - {"groups", "censoring", "label"}
    _require(not unknown, "<root>", f"unknown key(s) {sorted(unknown)}")
    groups_raw = data.get("groups")
    _require(
        isinstance(groups_raw, list) and len(groups_raw) == 2,
        "groups",
        "must be a list of exactly two groups",
    )
    groups = []
    for k, g in enumerate(groups_raw):
        gpath = f"groups[{k}]"
        _require(isinstance(g, dict), gpath, "must be an object")
        unknown = set(g) - {"n", "interest", "competing"}
        _require(not unknown, gpath, f"unknown key(s) {sorted(unknown)}")
        for key in ("n", "interest", "competing"):
            _require(key in g, f"{gpath}.{key}", "is required")
        _require(
            isinstance(g["n"], int) and not isinstance(g["n"], bool),
            f"{gpath}.n",
            "must be an integer",
        )
        interest = _parse_subdist(g["interest"], f"{gpath}.interest")
        competing = _parse_subdist(g["competing"], f"{gpath}.competing")
        try:
            groups.append(GroupSpec(interest=interest, competing=competing, n=g["n"]))
        except DataValidationError as exc:
            raise DataValidationError(f"scenario field {gpath!r}: {exc}") from None

    censoring = CensoringSpec()
    if "censoring" in data:
        c = data["censoring"]
        _require(isinstance(c, dict), "censoring", "must be an object")
        unknown = set(c) - {"target", "c"}
        _require(not unknown, "censoring", f"unknown key(s) {sorted(unknown)}")
        for key in ("target", "c"):
            if key in c:
                _require(
                    isinstance(c[key], (int, float)) and not isinstance(c[key], bool),
                    f"censoring.{key}",
                    "must be a number",
                )
        try:
            censoring = CensoringSpec(
                target=float(c["target"]) if "target" in c else None,
                bound=float(c["c"]) if "c" in c else None,
            )
        except DataValidationError as exc:
            raise DataValidationError(f"scenario field 'censoring': {exc}") from None

    label = data.get("label", "")
    _require(isinstance(label, str), "label", "must be a string")
    return ScenarioSpec(groups=(groups[0], groups[1]), censoring=censoring, label=label)


def scenario_to_dict(scn: ScenarioSpec) -> dict:
    def subdist(sd: PiecewiseWeibullCif) -> dict:
        return {
            "p": sd.mass,
            "segments": [
                {"start": s.start, "shape": s.shape, "scale": s.scale}
                for s in sd.segments
            ],
        }

    out: dict = {
        "label": scn.label,
        "groups": [
            {"n": g.n, "interest": subdist(g.interest), "competing": subdist(g.competing)}
            for g in scn.groups
        ],
    }
    if scn.censoring.bound is not None:
        out["censoring"] = {"c": scn.censoring.bound}
    elif scn.censoring.target is not None:
        out["censoring"] = {"target": scn.censoring.target}
    return out


def load_scenario(path) -> ScenarioSpec:
    """Load and validate a scenario JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"scenario file is not valid JSON: {exc}") from None
    return scenario_from_dict(data)


SHIPPED_SCENARIOS = (
    "a_null",
    "b_proportional",
    "c_nonproportional",
    "d_early",
    "e_late",
    "f_crossing",
)


def shipped_scenario_path(name: str) -> Path:
    """Path of one of the packaged example scenarios."""
    if name not in SHIPPED_SCENARIOS:
        raise DataValidationError(
            f"unknown scenario {name!r}; shipped: {', '.join(SHIPPED_SCENARIOS)}"
        )
    return Path(__file__).parent / "scenarios" / f"{name}.json"


def load_shipped_scenario(name: str) -> ScenarioSpec:
    """Load one of the packaged example scenarios by short name."""
    return load_scenario(shipped_scenario_path(name))
