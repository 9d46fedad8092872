"""Scenario-driven data generation and Monte Carlo studies.

Replicas draw from independent streams spawned from ``(seed, replica index)``
so results do not depend on the number of workers; aggregation is ordered by
replica index.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from . import copulas
from .baselines import Baseline, ExpWeibullSpec, WeibullSpec
from .copulas import Family
from .estimation import FitOptions, FitResult, fit, fit_nested, standard_errors, tau_with_interval, wald_intervals
from .likelihood import BaselineKind, ModelSpec, SurvivalData
from .regression import RegressionClass, RegressionSpec, inverse_survival

__all__ = [
    "Scenario",
    "generate_dataset",
    "mc_statistics",
    "MCStatistics",
    "MCReport",
    "run_mc",
    "LRStudy",
    "run_lr_study",
    "replica_rngs",
    "default_workers",
]

WEIBULL_KAPPA = ((1.2, 0.8), (1.6, 1.2))
EW_KAPPA = ((2.1, 0.5, 0.3), (2.5, 0.6, 0.2))
BETA_S = ((-0.7, 0.4), (-0.9, 0.6))
BETA_L = ((0.8, -0.6), (1.0, -0.8))
WEIBULL_CAPS = (6.0, 4.0)
EW_CAPS = (4.0, 3.0)


def default_workers() -> int:
    env = os.environ.get("SURVCOPULA_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class Scenario:
    """Data-generating design: copula at a Kendall's tau, baseline and regression class per margin.

    Both margins share the covariate row of a cluster: a Bernoulli(0.5)
    indicator and a standard normal. Censoring times are U(0, cap_j).
    """

    n: int = 500
    copula: Family = Family.CLAYTON
    tau: float = 0.25
    baseline: BaselineKind = BaselineKind.WEIBULL
    regression: RegressionClass = RegressionClass.YP
    kappa1: tuple = WEIBULL_KAPPA[0]
    kappa2: tuple = WEIBULL_KAPPA[1]
    beta1S: tuple = BETA_S[0]
    beta1L: tuple = BETA_L[0]
    beta2S: tuple = BETA_S[1]
    beta2L: tuple = BETA_L[1]
    caps: tuple = WEIBULL_CAPS
    seed: int = 2024

    def __post_init__(self):
        object.__setattr__(self, "copula", Family.parse(self.copula))
        object.__setattr__(self, "baseline", BaselineKind.parse(self.baseline))
        object.__setattr__(self, "regression", RegressionClass.parse(self.regression))
        if self.baseline not in (BaselineKind.WEIBULL, BaselineKind.EXPWEIBULL):
            raise ValueError("data generation supports Weibull and exponentiated Weibull baselines")
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        caps = tuple(float(c) for c in self.caps)
        if len(caps) != 2 or not all(c > 0 for c in caps):
            raise ValueError("censoring caps must be two positive numbers (inf disables censoring)")
        object.__setattr__(self, "caps", caps)
        for name in ("kappa1", "kappa2", "beta1S", "beta1L", "beta2S", "beta2L"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        # validates attainability: raises when out of range, warns when AMH is truncated
        copulas.tau_inverse(self.copula, self.tau)

    @classmethod
    def standard(cls, copula="Clayton", tau=0.25, baseline="weibull", regression="YP", n=500, seed=2024):
        """The standard design with the reference parameter values for ``baseline``."""
        kind = BaselineKind.parse(baseline)
        if kind is BaselineKind.EXPWEIBULL:
            return cls(n, copula, tau, kind, regression, EW_KAPPA[0], EW_KAPPA[1], caps=EW_CAPS, seed=seed)
        return cls(n, copula, tau, kind, regression, seed=seed)

    @property
    def theta(self) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return copulas.tau_inverse(self.copula, self.tau)

    @property
    def effective_tau(self) -> float:
        return copulas.kendall_tau(self.copula, self.theta)

    def baseline_model(self, j: int) -> Baseline:
        kappa = np.array(self.kappa1 if j == 1 else self.kappa2)
        spec = WeibullSpec() if self.baseline is BaselineKind.WEIBULL else ExpWeibullSpec()
        return Baseline(spec, kappa)

    def regression_model(self, j: int) -> RegressionSpec:
        bS = np.array(self.beta1S if j == 1 else self.beta2S)
        bL = np.array(self.beta1L if j == 1 else self.beta2L)
        if self.regression is RegressionClass.YP:
            return RegressionSpec(RegressionClass.YP, bS, bL)
        return RegressionSpec(self.regression, bS)

    def truth(self) -> dict:
        """True values keyed like fitted parameter names (regression part) plus theta and tau."""
        out = {"theta": self.theta, "tau": self.effective_tau}
        for j in (1, 2):
            reg = self.regression_model(j)
            for i, v in enumerate(reg.beta_short):
                out[f"beta{j}S[{i + 1}]"] = float(v)
            for i, v in enumerate(reg.beta_long):
                out[f"beta{j}L[{i + 1}]"] = float(v)
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["copula"] = str(self.copula)
        d["baseline"] = str(self.baseline)
        d["regression"] = str(self.regression)
        return d


def replica_rngs(seed: int, m: int) -> list[np.random.Generator]:
    """Independent generators for replicas 0..m-1, fixed by the seed alone."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(m)]


def generate_dataset(s: Scenario, rng: np.random.Generator) -> SurvivalData:
    n = int(s.n)
    X = np.column_stack([rng.binomial(1, 0.5, n).astype(float), rng.standard_normal(n)])
    uv = copulas.Copula(s.copula, s.theta).sample(n, rng)
    ys, ds = [], []
    for j in (1, 2):
        t = np.asarray(inverse_survival(s.regression_model(j), X, s.baseline_model(j), uv[:, j - 1]))
        cap = s.caps[j - 1]
        a = rng.uniform(0.0, cap, n) if math.isfinite(cap) else np.full(n, np.inf)
        ys.append(np.minimum(t, a))
        ds.append((t <= a).astype(np.int8))
    return SurvivalData(ys[0], ds[0], ys[1], ds[1], X, X.copy())


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class MCStatistics:
    AE: float
    SDE: float
    ASE: float
    ARB: float
    ALB: float
    AUB: float
    CR: float
    count: int

    def to_dict(self) -> dict:
        return asdict(self)


def mc_statistics(estimates, ses, lowers, uppers, truth: float) -> MCStatistics:
    """AE, SDE, ASE, ARB (percent), ALB, AUB and CR (percent) over replicas."""
    est = np.asarray(estimates, dtype=float)
    ses = np.asarray(ses, dtype=float)
    lo = np.asarray(lowers, dtype=float)
    hi = np.asarray(uppers, dtype=float)
    if not (est.shape == ses.shape == lo.shape == hi.shape):
        raise ValueError("estimates, ses, lowers and uppers must have equal lengths")
    if truth == 0:
        raise ValueError("ARB is undefined for a zero true value")
    m = est.size
    if m == 0:
        nan = math.nan
        return MCStatistics(nan, nan, nan, nan, nan, nan, nan, 0)
    sde = float(np.std(est, ddof=1)) if m > 1 else 0.0
    return MCStatistics(
        AE=float(np.mean(est)),
        SDE=sde,
        ASE=float(np.mean(ses)),
        ARB=float(100.0 * np.mean((est - truth) / abs(truth))),
        ALB=float(np.mean(lo)),
        AUB=float(np.mean(hi)),
        CR=float(100.0 * np.mean((lo <= truth) & (truth <= hi))),
        count=m,
    )


# ---------------------------------------------------------------------------
# Monte Carlo


def _fit_record(result: FitResult, level: float) -> dict:
    rec = {"converged": bool(result.converged), "loglik": result.loglik, "aic": result.aic}
    if result.covariance is None:
        rec["converged"] = False
        return rec
    est = result.estimates()
    se = dict(zip(result.names, standard_errors(result)))
    lo, hi = wald_intervals(result, level)
    for name, a, b in zip(result.names, lo, hi):
        rec[name] = (est[name], se[name], float(a), float(b))
    tau, (tlo, thi) = tau_with_interval(result, level)
    # delta-method SE of tau through the link, reported for ASE
    dtau = _tau_slope(result)
    se_tau = abs(dtau) * math.sqrt(max(result.covariance[0, 0], 0.0))
    rec["tau"] = (tau, se_tau, tlo, thi)
    return rec


def _tau_slope(result: FitResult, h: float = 1e-6) -> float:
    from .likelihood import link_to_theta

    fam = result.model.family
    z = result.packed[0]
    tp = copulas.kendall_tau(fam, float(link_to_theta(fam, z + h)))
    tm = copulas.kendall_tau(fam, float(link_to_theta(fam, z - h)))
    return (tp - tm) / (2 * h)


def _mc_replica(args):
    scenario, specs, options, level, rng = args
    data = generate_dataset(scenario, rng)
    out = []
    for spec in specs:
        try:
            res = fit(data, spec, options)
            out.append(_fit_record(res, level))
        except Exception as exc:  # a failed fit is data, not an error
            out.append({"converged": False, "error": f"{type(exc).__name__}: {exc}"})
    return {"failure_rates": data.failure_rates(), "fits": out}


@dataclass
class MCReport:
    scenario: Scenario
    specs: list
    M: int
    truth: dict
    statistics: dict  # spec label -> {quantity: MCStatistics}
    mean_aic: dict
    choice: dict  # spec label -> proportion
    converged: dict
    failures: dict
    records: list = field(repr=False, default_factory=list)

    def stat(self, spec_label: str, name: str) -> MCStatistics:
        return self.statistics[spec_label][name]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "M": self.M,
            "truth": self.truth,
            "statistics": {
                lab: {q: st.to_dict() for q, st in qs.items()} for lab, qs in self.statistics.items()
            },
            "mean_aic": self.mean_aic,
            "choice": self.choice,
            "converged": self.converged,
            "failures": self.failures,
        }

    def flat_records(self) -> list[dict]:
        """One row per (replica, spec) with estimate, SE and bounds per tracked quantity."""
        rows = []
        for r, rec in enumerate(self.records):
            for spec, f in zip(self.specs, rec["fits"]):
                row = {"replica": r, "spec": spec.label(), "converged": f.get("converged", False)}
                row["aic"] = f.get("aic", math.nan)
                row["loglik"] = f.get("loglik", math.nan)
                for name in self.truth:
                    if name in f:
                        e, s, a, b = f[name]
                        row.update({f"{name}:est": e, f"{name}:se": s, f"{name}:lo": a, f"{name}:hi": b})
                rows.append(row)
        return rows


def _run_map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def run_mc(
    scenario: Scenario,
    M: int,
    specs: list[ModelSpec],
    *,
    workers: int | None = None,
    options: FitOptions | None = None,
    level: float = 0.95,
) -> MCReport:
    """Generate ``M`` datasets, fit every spec to each and aggregate."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if not specs:
        raise ValueError("need at least one model spec")
    workers = default_workers() if workers is None else workers
    options = options or FitOptions()
    rngs = replica_rngs(scenario.seed, M)
    records = _run_map(_mc_replica, [(scenario, specs, options, level, g) for g in rngs], workers)

    truth = scenario.truth()
    labels = [s.label() for s in specs]
    statistics, mean_aic, converged, failures = {}, {}, {}, {}
    wins = np.zeros(len(specs))
    for k, lab in enumerate(labels):
        fits = [rec["fits"][k] for rec in records]
        ok = [f for f in fits if f.get("converged")]
        converged[lab] = len(ok)
        failures[lab] = len(fits) - len(ok)
        mean_aic[lab] = float(np.mean([f["aic"] for f in ok])) if ok else math.nan
        qs = {}
        for name, val in truth.items():
            rows = [f[name] for f in ok if name in f]
            if not rows or val == 0:
                continue
            arr = np.array(rows, dtype=float)
            qs[name] = mc_statistics(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], val)
        statistics[lab] = qs
    counted = 0
    for rec in records:
        aics = [f["aic"] if f.get("converged") else np.inf for f in rec["fits"]]
        if np.all(np.isinf(aics)):
            continue
        wins[int(np.argmin(aics))] += 1  # ties go to the earliest spec
        counted += 1
    choice = {lab: (float(w / counted) if counted else math.nan) for lab, w in zip(labels, wins)}
    return MCReport(scenario, list(specs), M, truth, statistics, mean_aic, choice, converged, failures, records)


# ---------------------------------------------------------------------------
# likelihood-ratio studies


@dataclass
class LRStudy:
    reduced: RegressionClass
    stats: np.ndarray
    p_values: np.ndarray
    df: int
    failures: int

    @property
    def mean_stat(self) -> float:
        return float(np.mean(self.stats)) if self.stats.size else math.nan

    @property
    def mean_p(self) -> float:
        return float(np.mean(self.p_values)) if self.p_values.size else math.nan

    def rejection_rate(self, level: float = 0.05) -> float:
        return float(np.mean(self.p_values < level)) if self.p_values.size else math.nan


def _lr_replica(args):
    scenario, spec, reduced_classes, options, rng = args
    data = generate_dataset(scenario, rng)
    out = {}
    for cls in reduced_classes:
        try:
            red, full, lr = fit_nested(data, replace(spec, regression=cls), options=options)
            out[str(cls)] = (lr.stat, lr.p_value, lr.df, red.converged and full.converged)
        except Exception:
            out[str(cls)] = (math.nan, math.nan, 0, False)
    return out


def run_lr_study(
    scenario: Scenario,
    M: int,
    spec: ModelSpec,
    reduced=("PH", "PO"),
    *,
    workers: int | None = None,
    options: FitOptions | None = None,
) -> dict:
    """PH-vs-YP and PO-vs-YP likelihood-ratio tests over ``M`` generated datasets."""
    workers = default_workers() if workers is None else workers
    options = options or FitOptions(compute_se=False)
    classes = [RegressionClass.parse(c) for c in reduced]
    rngs = replica_rngs(scenario.seed, M)
    recs = _run_map(_lr_replica, [(scenario, spec, classes, options, g) for g in rngs], workers)
    out = {}
    for cls in classes:
        rows = [r[str(cls)] for r in recs]
        good = [r for r in rows if r[3] and math.isfinite(r[0])]
        out[str(cls)] = LRStudy(
            cls,
            np.array([r[0] for r in good]),
            np.array([r[1] for r in good]),
            int(good[0][2]) if good else 0,
            len(rows) - len(good),
        )
    return out
