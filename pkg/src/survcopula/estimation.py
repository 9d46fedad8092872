"""Maximum-likelihood fitting, observed-information inference, AIC and LR tests."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special, stats

from . import copulas
from .baselines import BernsteinSpec, PiecewiseSpec, WeibullSpec
from .copulas import Family
from .likelihood import (
    Model,
    ModelSpec,
    ParamSet,
    SurvivalData,
    link_to_theta,
    theta_link_derivative,
    theta_to_link,
)
from .optimize import bfgs_maximize, fd_gradient, numerical_hessian
from .regression import RegressionClass, log_yp_hazard, log_yp_survival

__all__ = [
    "FitOptions",
    "FitResult",
    "LRTestResult",
    "fit",
    "fit_nested",
    "pack",
    "unpack",
    "observed_information",
    "standard_errors",
    "wald_intervals",
    "aic",
    "lr_test",
    "lr_pvalue",
    "tau_with_interval",
    "initial_params",
]

MIN_COMPLETE_PAIRS = 30
DEFAULT_TAU = 0.1


@dataclass(frozen=True)
class FitOptions:
    grad_tol: float = 1e-5
    rel_tol: float = 1e-10
    max_iter: int = 1000
    grad_step: float = 1e-6
    hess_step: float = 1e-4
    loose_grad_tol: float = 1e-3
    multistart: int = 3
    jitter: float = 0.3
    compute_se: bool = True
    seed: int = 20240229


@dataclass(frozen=True)
class FitResult:
    model: Model
    params: ParamSet
    loglik: float
    packed: np.ndarray = field(repr=False)
    converged: bool
    n_params: int
    names: tuple = field(repr=False)
    covariance: np.ndarray | None = field(default=None, repr=False)
    hessian_ok: bool = True
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def spec(self) -> ModelSpec:
        return self.model.spec

    @property
    def aic(self) -> float:
        return aic(self)

    def estimates(self) -> dict:
        """Natural-scale estimate for every free parameter, keyed by name."""
        return dict(zip(self.names, _natural(self.model, self.packed)))

    def standard_errors(self) -> dict:
        return dict(zip(self.names, standard_errors(self)))

    def to_dict(self, level: float = 0.95) -> dict:
        est = _natural(self.model, self.packed)
        se = standard_errors(self) if self.covariance is not None else np.full(est.size, np.nan)
        lo, hi = wald_intervals(self, level) if self.covariance is not None else (se, se)
        tau, (tlo, thi) = tau_with_interval(self, level) if self.covariance is not None else (
            copulas.kendall_tau(self.model.family, self.params.theta),
            (math.nan, math.nan),
        )
        return {
            "model": self.spec.label(),
            "converged": self.converged,
            "loglik": self.loglik,
            "n_params": self.n_params,
            "aic": self.aic,
            "parameters": [
                {"name": n, "estimate": float(e), "se": float(s), "lower": float(a), "upper": float(b)}
                for n, e, s, a, b in zip(self.names, est, se, lo, hi)
            ],
            "tau": {"estimate": tau, "lower": tlo, "upper": thi, "level": level},
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# packing


def pack(params: ParamSet, model: Model) -> np.ndarray:
    return model.pack(params)


def unpack(z, model: Model) -> ParamSet:
    return model.unpack(z)


def _natural(model: Model, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = z.copy()
    pos = model.positive_mask()
    out[pos] = np.exp(z[pos])
    out[0] = float(link_to_theta(model.family, z[0]))
    return out


def _natural_jacobian(model: Model, z) -> np.ndarray:
    """Diagonal of d(natural)/d(packed)."""
    z = np.asarray(z, dtype=float)
    jac = np.ones_like(z)
    pos = model.positive_mask()
    jac[pos] = np.exp(z[pos])
    jac[0] = float(theta_link_derivative(model.family, z[0]))
    return jac


# ---------------------------------------------------------------------------
# initialization


def _margin_start_kappa(base, y, d) -> np.ndarray:
    """Crude baseline start from an exponential fit (piecewise: occurrence/exposure)."""
    rate = max(d.sum(), 1) / max(y.sum(), 1e-12)
    if isinstance(base, WeibullSpec):
        return np.array([1.0, rate])
    if isinstance(base, BernsteinSpec):
        # sum_k I_x(k, m-k+1) = m x, so equal gammas give H(t) = rate * t
        return np.full(base.degree, rate * base.upsilon / base.degree)
    if isinstance(base, PiecewiseSpec):
        edges = np.concatenate([[0.0], base.grid])
        width = np.diff(edges)
        width[-1] = np.inf
        exposure = np.clip(y[None, :] - edges[:-1, None], 0.0, width[:, None]).sum(axis=1)
        idx = np.minimum(np.searchsorted(np.asarray(base.grid), y, side="left"), len(base.grid) - 1)
        events = np.bincount(idx, weights=d, minlength=len(base.grid))
        return np.maximum(events + 0.5, 0.5) / np.maximum(exposure, 1e-12)
    raise TypeError(f"no start rule for {base!r}")


def _fit_margin(model: Model, j: int, data: SurvivalData, options: FitOptions):
    """Independent YP/PH/PO fit of margin j; returns packed (log kappa, betaS[, betaL])."""
    base = model.base(j)
    y, d, X = data.margin(j)
    design = base.design(y)
    k, q = base.n_params, model.q(j)
    yp = model.has_long
    reg = model.regression

    def f_batch(Z):
        Z = np.atleast_2d(Z)
        kappa = np.exp(Z[:, :k])
        bS = Z[:, k : k + q]
        bL = Z[:, k + q : k + 2 * q] if yp else (bS if reg is RegressionClass.PH else np.zeros_like(bS))
        with np.errstate(all="ignore"):
            log_h0, H0 = base.evaluate(kappa, design)
            es, el = bS @ X.T, bL @ X.T
            ll = log_yp_survival(H0, es, el) + d * log_yp_hazard(log_h0, H0, es, el)
            tot = ll.sum(axis=1)
        return np.where(np.isfinite(tot), tot, -np.inf)

    z0 = np.concatenate([np.log(_margin_start_kappa(base, y, d)), np.zeros(q * (2 if yp else 1))])
    res = bfgs_maximize(
        f_batch,
        z0,
        grad_tol=options.grad_tol,
        rel_tol=1e-8,
        max_iter=options.max_iter,
        grad_step=options.grad_step,
        scale=max(data.n, 1),
    )
    return res.x if np.isfinite(res.fun) else z0


def _start_tau(family: Family, data: SurvivalData) -> float:
    both = (data.d1 == 1) & (data.d2 == 1)
    if both.sum() < MIN_COMPLETE_PAIRS:
        tau = DEFAULT_TAU
    else:
        tau = float(stats.kendalltau(data.y1[both], data.y2[both]).statistic)
        if not math.isfinite(tau):
            tau = DEFAULT_TAU
    lo, hi = copulas.tau_range(family)
    margin = 0.01
    return min(max(tau, lo + margin), hi - margin)


def initial_params(model: Model, data: SurvivalData, options: FitOptions | None = None) -> np.ndarray:
    """Two-stage start: independent margin fits, then theta from Kendall's tau."""
    options = options or FitOptions()
    sl, k = model._slices()
    z = np.empty(k)
    tau = _start_tau(model.family, data)
    z[0] = float(theta_to_link(model.family, copulas.tau_inverse(model.family, tau)))
    for j in (1, 2):
        zm = _fit_margin(model, j, data, options)
        kk, q = model.base(j).n_params, model.q(j)
        z[sl[f"kappa{j}"]] = zm[:kk]
        z[sl[f"beta{j}S"]] = zm[kk : kk + q]
        if model.has_long:
            z[sl[f"beta{j}L"]] = zm[kk + q : kk + 2 * q]
    return z


# ---------------------------------------------------------------------------
# fitting


def _theta_pinned(model: Model, z0: float) -> bool:
    fam = model.family
    if fam in (Family.CLAYTON, Family.GH, Family.JOE):
        return z0 < math.log(1e-4) or z0 > math.log(1e4)
    if fam is Family.AMH:
        return abs(math.tanh(z0)) > 0.999
    return abs(z0) > 1e3


def fit(
    data: SurvivalData,
    spec: ModelSpec | Model,
    options: FitOptions | None = None,
    *,
    start: ParamSet | np.ndarray | None = None,
    multistart: bool | None = None,
) -> FitResult:
    """Maximize the joint log-likelihood over all parameters simultaneously.

    ``spec`` may be an already resolved :class:`Model` (to keep structural
    metadata fixed, e.g. for bootstrap refits). ``start`` overrides the
    two-stage initialization.
    """
    options = options or FitOptions()
    if data.n == 0:
        raise ValueError("cannot fit an empty dataset")
    model = spec if isinstance(spec, Model) else spec.resolve(data)
    prep = model.prepare(data)

    def f_batch(Z):
        return model.loglik_batch(Z, prep)

    if start is None:
        z0 = initial_params(model, data, options)
    elif isinstance(start, ParamSet):
        z0 = model.pack(start)
    else:
        z0 = np.asarray(start, dtype=float)

    runs = []
    res = bfgs_maximize(
        f_batch,
        z0,
        grad_tol=options.grad_tol,
        rel_tol=options.rel_tol,
        max_iter=options.max_iter,
        grad_step=options.grad_step,
        scale=data.n,
        loose_grad_tol=options.loose_grad_tol,
    )
    runs.append(res)
    do_multi = options.multistart > 0 if multistart is None else multistart
    if do_multi and (not res.converged or _theta_pinned(model, res.x[0])):
        rng = np.random.default_rng(options.seed)
        for _ in range(options.multistart):
            zj = z0 + options.jitter * rng.standard_normal(z0.size) * np.maximum(1.0, np.abs(z0))
            runs.append(
                bfgs_maximize(
                    f_batch,
                    zj,
                    grad_tol=options.grad_tol,
                    rel_tol=options.rel_tol,
                    max_iter=options.max_iter,
                    grad_step=options.grad_step,
                    scale=data.n,
                    loose_grad_tol=options.loose_grad_tol,
                )
            )
    finite = [r for r in runs if np.isfinite(r.fun)]
    pool = [r for r in finite if r.converged] or finite or runs
    best = max(pool, key=lambda r: r.fun if np.isfinite(r.fun) else -np.inf)

    _, clamps = model.loglik_matrix(best.x[None, :], prep, return_clamps=True)
    diagnostics = {
        "reason": best.reason,
        "iterations": int(sum(r.n_iter for r in runs)),
        "evaluations": int(sum(r.n_fev for r in runs)),
        "starts": len(runs),
        "grad_max": float(np.max(np.abs(best.grad))) if best.grad.size else 0.0,
        "u_clamps": int(clamps),
    }
    result = FitResult(
        model=model,
        params=model.unpack(best.x),
        loglik=float(best.fun),
        packed=best.x,
        converged=bool(best.converged),
        n_params=model.n_free,
        names=tuple(model.param_names()),
        diagnostics=diagnostics,
    )
    if options.compute_se and np.isfinite(best.fun):
        result = _with_covariance(result, data, options)
    return result


def _with_covariance(result: FitResult, data: SurvivalData, options: FitOptions) -> FitResult:
    info = observed_information(result, data, options.hess_step)
    ok = bool(np.all(np.isfinite(info)))
    cov = None
    if ok:
        try:
            cov = np.linalg.inv(info)
            w = np.linalg.eigvalsh(info)
            ok = bool(w.min() > 0)
        except np.linalg.LinAlgError:
            ok = False
    if not ok:
        warnings.warn("observed information is singular or indefinite; using pseudo-inverse", stacklevel=3)
        cov = np.linalg.pinv(np.where(np.isfinite(info), info, 0.0))
    cov = 0.5 * (cov + cov.T)
    diagnostics = dict(result.diagnostics, hessian_ok=ok)
    return replace(result, covariance=cov, hessian_ok=ok, diagnostics=diagnostics)


def observed_information(result: FitResult, data: SurvivalData, rel_step: float = 1e-4) -> np.ndarray:
    """Negative Hessian of the log-likelihood in packed coordinates."""
    prep = result.model.prepare(data)
    H = numerical_hessian(lambda Z: result.model.loglik_batch(Z, prep), result.packed, rel_step)
    return -0.5 * (H + H.T)


def standard_errors(result: FitResult) -> np.ndarray:
    """Natural-scale standard errors (delta method through the links)."""
    if result.covariance is None:
        raise ValueError("fit has no covariance (compute_se was off)")
    se_packed = np.sqrt(np.clip(np.diag(result.covariance), 0.0, None))
    return np.abs(_natural_jacobian(result.model, result.packed)) * se_packed


def wald_intervals(result: FitResult, level: float = 0.95):
    """Natural-scale Wald intervals ``estimate -/+ z * SE``."""
    z = stats.norm.ppf(0.5 + level / 2.0)
    est = _natural(result.model, result.packed)
    se = standard_errors(result)
    return est - z * se, est + z * se


def aic(result: FitResult) -> float:
    return 2.0 * result.n_params - 2.0 * result.loglik


def tau_with_interval(result: FitResult, level: float = 0.95):
    """Plug-in Kendall's tau and the image of the link-scale theta interval."""
    fam = result.model.family
    tau_hat = copulas.kendall_tau(fam, result.params.theta)
    if result.covariance is None:
        raise ValueError("fit has no covariance (compute_se was off)")
    z = stats.norm.ppf(0.5 + level / 2.0)
    zt = result.packed[0]
    se = math.sqrt(max(result.covariance[0, 0], 0.0))
    ends = []
    for v in (zt - z * se, zt + z * se):
        theta = float(link_to_theta(fam, v))
        try:
            theta = copulas.check_theta(fam, theta)
        except copulas.CopulaDomainError:
            warnings.warn("theta interval endpoint outside the family domain; clipped", stacklevel=2)
            theta = float(np.clip(theta, -1.0, 1.0)) if fam is Family.AMH else max(theta, 1.0)
        ends.append(copulas.kendall_tau(fam, theta))
    return tau_hat, (min(ends), max(ends))


# ---------------------------------------------------------------------------
# likelihood-ratio tests


@dataclass(frozen=True)
class LRTestResult:
    stat: float
    df: int
    p_value: float
    reduced: str
    full: str

    def decision(self, level: float = 0.05) -> str:
        return self.full if self.p_value < level else self.reduced


def lr_pvalue(stat: float, df: int) -> float:
    """Upper tail of the chi-square law via the regularized incomplete gamma."""
    if df <= 0:
        raise ValueError("df must be positive")
    return float(special.gammaincc(df / 2.0, max(stat, 0.0) / 2.0))


def _check_nested(reduced: Model, full: Model):
    rs, fs = reduced.spec, full.spec
    if rs.copula is not fs.copula or rs.baseline is not fs.baseline:
        raise ValueError("not nested: copula and baseline must match")
    if reduced.base1 != full.base1 or reduced.base2 != full.base2:
        raise ValueError("not nested: baseline structure differs")
    if fs.regression is not RegressionClass.YP or rs.regression is RegressionClass.YP:
        raise ValueError("not nested: need a PH or PO model inside a YP model")


def lr_test(reduced: FitResult, full: FitResult) -> LRTestResult:
    _check_nested(reduced.model, full.model)
    df = full.n_params - reduced.n_params
    if df <= 0:
        raise ValueError("not nested: zero degrees of freedom")
    stat = 2.0 * (full.loglik - reduced.loglik)
    return LRTestResult(stat, df, lr_pvalue(stat, df), str(reduced.spec.regression), str(full.spec.regression))


def embed_reduced(reduced: FitResult, full_model: Model) -> np.ndarray:
    """Packed start for the YP model at the reduced (PH or PO) optimum."""
    p = reduced.params
    return full_model.pack(p)


def fit_nested(
    data: SurvivalData,
    reduced_spec: ModelSpec,
    full_spec: ModelSpec | None = None,
    options: FitOptions | None = None,
):
    """Fit a PH/PO model and the YP model started at its optimum; return (reduced, full, LR)."""
    full_spec = full_spec or replace(reduced_spec, regression=RegressionClass.YP)
    reduced = fit(data, reduced_spec, options)
    full_model = full_spec.resolve(data)
    if full_model.base1 != reduced.model.base1 or full_model.base2 != reduced.model.base2:
        full_model = replace(full_model, base1=reduced.model.base1, base2=reduced.model.base2)
    full = fit(data, full_model, options, start=embed_reduced(reduced, full_model))
    return reduced, full, lr_test(reduced, full)
