"""Crossing time of two covariate-specific marginal survival curves.

Under YP margins with opposite-signed short- and long-term effects the curves
S(t | x_control) and S(t | x_treat) intersect once; the crossing time is found
by a bracketing root search and given a percentile interval by resampling
clusters (both margins together, preserving the dependence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .estimation import FitOptions, FitResult, fit
from .likelihood import ModelSpec, SurvivalData
from .regression import log_yp_survival, survival
from .simulation import Scenario, _run_map, default_workers, generate_dataset, replica_rngs

__all__ = [
    "NoCrossingError",
    "survival_difference",
    "default_bracket",
    "crossing_point",
    "CrossingBootstrap",
    "bootstrap_crossing",
    "true_crossing",
    "CrossingStudy",
    "run_crossing_study",
]

ROOT_RESIDUAL = 1e-10
BRACKET_LO = 1e-6
BRACKET_FACTOR = 1.5


class NoCrossingError(ValueError):
    """The two survival curves do not change order inside the bracket."""


def survival_difference(result: FitResult, margin: int, x_control, x_treat):
    """g(t) = S(t | x_control) - S(t | x_treat) for the fitted margin."""
    base = result.model.margin_baseline(result.params, margin)
    reg = result.model.margin_regression(result.params, margin)
    xc = np.atleast_1d(np.asarray(x_control, dtype=float))
    xt = np.atleast_1d(np.asarray(x_treat, dtype=float))
    es_c, el_c = reg.linear_predictors(xc)
    es_t, el_t = reg.linear_predictors(xt)

    def g(t: float) -> float:
        H0 = float(base.cum_hazard(t))
        return math.exp(log_yp_survival(H0, es_c, el_c)) - math.exp(log_yp_survival(H0, es_t, el_t))

    return g


def default_bracket(data: SurvivalData, margin: int) -> tuple[float, float]:
    y, _, _ = data.margin(margin)
    return (BRACKET_LO, BRACKET_FACTOR * float(np.max(y)))


def crossing_point(result: FitResult, margin: int, x_control, x_treat, bracket) -> float:
    """Root of S(t | x_control) = S(t | x_treat) inside ``bracket``.

    Without a sign change the upper end is doubled once before giving up.
    Bernstein baselines cap the bracket at their horizon.
    """
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    if np.array_equal(np.asarray(x_control, float), np.asarray(x_treat, float)):
        raise NoCrossingError("identical covariate rows: the curves coincide")
    horizon = result.model.base(margin).max_time()
    g = survival_difference(result, margin, x_control, x_treat)

    g_lo = g(lo)
    top = min(hi, horizon)
    if not g_lo * g(top) < 0:
        wider = min(2.0 * hi, horizon)
        if not (wider > top and g_lo * g(wider) < 0):
            raise NoCrossingError(f"no crossing in bracket ({lo:g}, {wider:g})")
        top = wider

    root = optimize.brentq(g, lo, top, xtol=1e-300, rtol=1e-13, maxiter=500)
    if abs(g(root)) >= ROOT_RESIDUAL:
        raise NoCrossingError(f"root residual {abs(g(root)):.3g} above tolerance")
    return root


@dataclass(frozen=True)
class CrossingBootstrap:
    point: float
    lower: float
    upper: float
    level: float
    B: int
    successes: int
    failures: int
    unreliable: bool
    replicates: np.ndarray = field(repr=False)

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
            "B": self.B,
            "successes": self.successes,
            "failures": self.failures,
            "unreliable": self.unreliable,
        }


def _boot_replicate(args):
    data, result, margin, xc, xt, bracket, options, rng = args
    idx = rng.integers(0, data.n, data.n)
    sample = data.subset(idx)
    try:
        refit = fit(sample, result.model, options, start=result.packed, multistart=False)
        if not refit.converged:
            return math.nan
        return crossing_point(refit, margin, xc, xt, bracket)
    except (NoCrossingError, ValueError, FloatingPointError):
        return math.nan


def bootstrap_crossing(
    data: SurvivalData,
    result: FitResult,
    margin: int,
    x_control,
    x_treat,
    *,
    B: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    bracket=None,
    workers: int | None = None,
    options: FitOptions | None = None,
    max_failure_rate: float = 0.2,
) -> CrossingBootstrap:
    """Percentile interval for the crossing time from ``B`` cluster resamples.

    Refits keep the original structural metadata and start at the original
    estimates. Replicates whose refit fails or whose curves do not cross are
    dropped and counted; above ``max_failure_rate`` the interval is flagged.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    bracket = bracket or default_bracket(data, margin)
    point = crossing_point(result, margin, x_control, x_treat, bracket)
    options = options or FitOptions(compute_se=False, multistart=0)
    workers = default_workers() if workers is None else workers
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(B)]
    tasks = [(data, result, margin, x_control, x_treat, bracket, options, g) for g in rngs]
    roots = np.array(_run_map(_boot_replicate, tasks, workers), dtype=float)
    ok = roots[np.isfinite(roots)]
    failures = B - ok.size
    alpha = 1.0 - level
    if ok.size:
        lower, upper = (float(v) for v in np.quantile(ok, [alpha / 2.0, 1.0 - alpha / 2.0]))
    else:
        lower = upper = math.nan
    return CrossingBootstrap(
        point=point,
        lower=lower,
        upper=upper,
        level=level,
        B=B,
        successes=int(ok.size),
        failures=int(failures),
        unreliable=bool(failures > max_failure_rate * B),
        replicates=roots,
    )


# ---------------------------------------------------------------------------
# Monte Carlo study of the crossing time


def true_crossing(scenario: Scenario, margin: int, x_control, x_treat, bracket=(BRACKET_LO, 100.0)) -> float:
    """Crossing time of the data-generating survival curves of ``margin``."""
    base = scenario.baseline_model(margin)
    reg = scenario.regression_model(margin)

    def g(t):
        return float(survival(reg, x_control, base, t)) - float(survival(reg, x_treat, base, t))

    lo, hi = bracket
    if not g(lo) * g(hi) < 0:
        raise NoCrossingError("the true survival curves do not cross in the bracket")
    return optimize.brentq(g, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)


@dataclass
class CrossingStudy:
    truth: float
    points: np.ndarray
    lowers: np.ndarray
    uppers: np.ndarray
    failures: int
    unreliable: int

    @property
    def count(self) -> int:
        return int(self.points.size)

    @property
    def AE(self) -> float:
        return float(np.mean(self.points)) if self.count else math.nan

    @property
    def ARB(self) -> float:
        """Average relative bias of the point estimates, in percent."""
        return float(100.0 * np.mean((self.points - self.truth) / self.truth)) if self.count else math.nan

    @property
    def CR(self) -> float:
        """Percentage of bootstrap intervals covering the true crossing time."""
        if not self.count:
            return math.nan
        return float(100.0 * np.mean((self.lowers <= self.truth) & (self.truth <= self.uppers)))

    def to_dict(self) -> dict:
        return {
            "truth": self.truth,
            "count": self.count,
            "AE": self.AE,
            "ARB": self.ARB,
            "CR": self.CR,
            "ALB": float(np.mean(self.lowers)) if self.count else math.nan,
            "AUB": float(np.mean(self.uppers)) if self.count else math.nan,
            "failures": self.failures,
            "unreliable": self.unreliable,
        }


def _study_replica(args):
    scenario, spec, margin, xc, xt, B, level, options, rng = args
    data = generate_dataset(scenario, rng)
    boot_seed = int(rng.integers(2**63 - 1))
    try:
        res = fit(data, spec, options)
        if not res.converged:
            return None
        bs = bootstrap_crossing(data, res, margin, xc, xt, B=B, level=level, seed=boot_seed, workers=1)
    except (NoCrossingError, ValueError, FloatingPointError):
        return None
    return bs.point, bs.lower, bs.upper, bs.unreliable


def run_crossing_study(
    scenario: Scenario,
    M: int,
    spec: ModelSpec,
    *,
    margin: int = 1,
    x_control=(0.0, 0.0),
    x_treat=(1.0, 0.0),
    B: int = 200,
    level: float = 0.95,
    workers: int | None = None,
    options: FitOptions | None = None,
) -> CrossingStudy:
    """Fit ``spec`` to ``M`` generated datasets and bootstrap each crossing time.

    Replicas run in parallel; the bootstraps inside a replica run serially
    with a seed drawn from the replica's own stream.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    truth = true_crossing(scenario, margin, x_control, x_treat)
    workers = default_workers() if workers is None else workers
    options = options or FitOptions()
    tasks = [
        (scenario, spec, margin, x_control, x_treat, B, level, options, g) for g in replica_rngs(scenario.seed, M)
    ]
    rows = _run_map(_study_replica, tasks, workers)
    good = [r for r in rows if r is not None and math.isfinite(r[1])]
    arr = np.array([r[:3] for r in good], dtype=float).reshape(-1, 3)
    return CrossingStudy(
        truth=truth,
        points=arr[:, 0],
        lowers=arr[:, 1],
        uppers=arr[:, 2],
        failures=M - len(good),
        unreliable=int(sum(r[3] for r in good)),
    )
