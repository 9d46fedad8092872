"""Censored bivariate survival-copula log-likelihood.

Each cluster contributes, with ``u_j = S_j(y_j | x_j)``:

====================  ===============================================
(d1, d2) = (0, 0)     log C(u1, u2)
(1, 0)                log dC/du1 (u1, u2) + log f1(y1)
(0, 1)                log dC/du2 (u1, u2) + log f2(y2)
(1, 1)                log c(u1, u2) + log f1(y1) + log f2(y2)
====================  ===============================================

A :class:`Model` is a :class:`ModelSpec` whose structural baseline metadata
(Bernstein horizon, piecewise grid) has been fixed from a dataset. It owns the
mapping between :class:`ParamSet` and the unconstrained vector used by the
optimizer, and evaluates the likelihood for a whole batch of such vectors at
once: finite-difference gradients and Hessians are a single numpy pass.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import copulas
from .baselines import (
    Baseline,
    BaselineSpec,
    BernsteinSpec,
    ExpWeibullSpec,
    PiecewiseSpec,
    WeibullSpec,
    pe_grid_from_times,
    structural_size,
)
from .copulas import Family
from .regression import RegressionClass, RegressionSpec, log_yp_hazard, log_yp_survival

__all__ = [
    "BaselineKind",
    "SurvivalData",
    "ModelSpec",
    "ParamSet",
    "Model",
    "NonFiniteLikelihoodError",
    "U_CLAMP",
    "cluster_loglik",
    "total_loglik",
    "marginal_loglik",
]

U_CLAMP = 1e-15
_LOG_U_MIN = math.log(U_CLAMP)
_LOG_U_MAX = math.log1p(-U_CLAMP)


class NonFiniteLikelihoodError(FloatingPointError):
    """Log-likelihood is not finite; ``clusters`` lists the offending indices."""

    def __init__(self, clusters):
        self.clusters = list(map(int, clusters))
        shown = ", ".join(map(str, self.clusters[:10]))
        more = "" if len(self.clusters) <= 10 else f", ... ({len(self.clusters)} total)"
        super().__init__(f"non-finite log-likelihood in clusters {shown}{more}")


class BaselineKind(str, enum.Enum):
    WEIBULL = "weibull"
    EXPWEIBULL = "expweibull"
    BP = "bp"
    PE = "pe"

    @classmethod
    def parse(cls, value) -> "BaselineKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"ew": "expweibull", "bernstein": "bp", "piecewise": "pe", "pwe": "pe"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown baseline {value!r}") from None

    def __str__(self) -> str:
        return self.value


# ---------------------------------------------------------------------------
# data


def _as_design(x, n, name):
    if x is None:
        return np.zeros((n, 0))
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != n:
        raise ValueError(f"{name}: expected {n} rows, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name}: covariates must be finite")
    return x


@dataclass(frozen=True)
class SurvivalData:
    """n clusters of ``(y1, d1, y2, d2)`` with margin-specific covariate rows."""

    y1: np.ndarray = field(repr=False)
    d1: np.ndarray = field(repr=False)
    y2: np.ndarray = field(repr=False)
    d2: np.ndarray = field(repr=False)
    X1: np.ndarray | None = field(default=None, repr=False)
    X2: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        y1 = np.asarray(self.y1, dtype=float).reshape(-1)
        y2 = np.asarray(self.y2, dtype=float).reshape(-1)
        n = y1.size
        if y2.size != n:
            raise ValueError("y1 and y2 must have the same length")
        for name, y in (("y1", y1), ("y2", y2)):
            bad = np.flatnonzero(~np.isfinite(y) | (y <= 0))
            if bad.size:
                raise ValueError(f"{name} must be finite and > 0 (first bad cluster {bad[0]})")
        ds = []
        for name, d in (("d1", self.d1), ("d2", self.d2)):
            d = np.asarray(d).reshape(-1)
            if d.size != n:
                raise ValueError(f"{name} must have length {n}")
            bad = np.flatnonzero((d != 0) & (d != 1))
            if bad.size:
                raise ValueError(f"{name} must be 0/1 (first bad cluster {bad[0]})")
            ds.append(d.astype(np.int8))
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y2", y2)
        object.__setattr__(self, "d1", ds[0])
        object.__setattr__(self, "d2", ds[1])
        object.__setattr__(self, "X1", _as_design(self.X1, n, "X1"))
        object.__setattr__(self, "X2", _as_design(self.X2, n, "X2"))

    @property
    def n(self) -> int:
        return self.y1.size

    def __len__(self) -> int:
        return self.n

    def margin(self, j: int):
        """``(y, d, X)`` of margin ``j`` (1 or 2)."""
        if j == 1:
            return self.y1, self.d1, self.X1
        if j == 2:
            return self.y2, self.d2, self.X2
        raise ValueError("margin must be 1 or 2")

    def subset(self, idx) -> "SurvivalData":
        idx = np.asarray(idx)
        return SurvivalData(
            self.y1[idx], self.d1[idx], self.y2[idx], self.d2[idx], self.X1[idx], self.X2[idx]
        )

    def failure_rates(self) -> tuple[float, float]:
        if self.n == 0:
            return (math.nan, math.nan)
        return float(self.d1.mean()), float(self.d2.mean())


# ---------------------------------------------------------------------------
# model specification


@dataclass(frozen=True)
class ModelSpec:
    """Copula family, baseline family and regression class shared by both margins.

    ``degree`` (Bernstein) and ``n_intervals`` (piecewise) default to the
    smallest integer not below n**(2/5). ``upsilon`` and ``grids`` fix the
    structural metadata explicitly instead of deriving it from the data.
    """

    copula: Family
    baseline: BaselineKind = BaselineKind.WEIBULL
    regression: RegressionClass = RegressionClass.YP
    degree: int | None = None
    n_intervals: int | None = None
    upsilon: tuple | None = None
    grids: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "copula", Family.parse(self.copula))
        object.__setattr__(self, "baseline", BaselineKind.parse(self.baseline))
        object.__setattr__(self, "regression", RegressionClass.parse(self.regression))
        if self.baseline is BaselineKind.EXPWEIBULL:
            raise ValueError("the exponentiated Weibull baseline is for data generation only")
        for name in ("degree", "n_intervals"):
            v = getattr(self, name)
            if v is not None and int(v) < 1:
                raise ValueError(f"{name} must be >= 1")

    def label(self) -> str:
        return f"{self.copula}-{self.baseline}-{self.regression}"

    def resolve(self, data: SurvivalData) -> "Model":
        """Fix structural metadata from ``data`` and return a :class:`Model`."""
        specs = []
        for j in (1, 2):
            y, d, _ = data.margin(j)
            if self.baseline is BaselineKind.WEIBULL:
                specs.append(WeibullSpec())
            elif self.baseline is BaselineKind.BP:
                m = self.degree or structural_size(data.n)
                ups = self.upsilon[j - 1] if self.upsilon else 1.01 * float(np.max(y))
                specs.append(BernsteinSpec(int(m), float(ups)))
            else:
                if self.grids:
                    grid = tuple(self.grids[j - 1])
                else:
                    p = self.n_intervals or structural_size(data.n)
                    events = y[d == 1]
                    grid = tuple(pe_grid_from_times(events if events.size else y, int(p)))
                specs.append(PiecewiseSpec(grid))
        return Model(self, specs[0], specs[1], data.X1.shape[1], data.X2.shape[1])


@dataclass(frozen=True)
class ParamSet:
    """Natural-scale parameters of a bivariate model."""

    theta: float
    kappa1: np.ndarray
    kappa2: np.ndarray
    beta1S: np.ndarray
    beta1L: np.ndarray
    beta2S: np.ndarray
    beta2L: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        for name in ("kappa1", "kappa2", "beta1S", "beta1L", "beta2S", "beta2L"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    def kappa(self, j):
        return self.kappa1 if j == 1 else self.kappa2

    def beta(self, j):
        return (self.beta1S, self.beta1L) if j == 1 else (self.beta2S, self.beta2L)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            **{k: getattr(self, k).tolist() for k in ("kappa1", "kappa2", "beta1S", "beta1L", "beta2S", "beta2L")},
        }


# ---------------------------------------------------------------------------
# theta link


def theta_to_link(family: Family, theta):
    theta = np.asarray(theta, dtype=float)
    if family is Family.CLAYTON:
        return np.log(theta)
    if family in (Family.GH, Family.JOE):
        with np.errstate(divide="ignore"):
            return np.log(theta - 1.0)
    if family is Family.AMH:
        with np.errstate(divide="ignore"):
            return np.arctanh(theta)
    return theta.copy()


def link_to_theta(family: Family, z):
    z = np.asarray(z, dtype=float)
    if family is Family.CLAYTON:
        return np.exp(z)
    if family in (Family.GH, Family.JOE):
        return 1.0 + np.exp(z)
    if family is Family.AMH:
        return np.tanh(z)
    return z.copy()


def theta_link_derivative(family: Family, z):
    """d theta / d z."""
    z = np.asarray(z, dtype=float)
    if family in (Family.CLAYTON, Family.GH, Family.JOE):
        return np.exp(z)
    if family is Family.AMH:
        return 1.0 - np.tanh(z) ** 2
    return np.ones_like(z)


# ---------------------------------------------------------------------------


@dataclass
class _Prepared:
    """Data-dependent quantities reused across likelihood evaluations."""

    n: int
    designs: tuple
    X: tuple
    d: tuple
    patterns: dict


@dataclass(frozen=True)
class Model:
    """A resolved :class:`ModelSpec` with per-margin baseline structure."""

    spec: ModelSpec
    base1: BaselineSpec
    base2: BaselineSpec
    q1: int
    q2: int

    # -- layout ---------------------------------------------------------------

    @property
    def family(self) -> Family:
        return self.spec.copula

    @property
    def regression(self) -> RegressionClass:
        return self.spec.regression

    def base(self, j) -> BaselineSpec:
        return self.base1 if j == 1 else self.base2

    def q(self, j) -> int:
        return self.q1 if j == 1 else self.q2

    @property
    def has_long(self) -> bool:
        return self.regression is RegressionClass.YP

    def _slices(self):
        out = {"theta": slice(0, 1)}
        pos = 1
        for j in (1, 2):
            k = self.base(j).n_params
            out[f"kappa{j}"] = slice(pos, pos + k)
            pos += k
        for j in (1, 2):
            out[f"beta{j}S"] = slice(pos, pos + self.q(j))
            pos += self.q(j)
            if self.has_long:
                out[f"beta{j}L"] = slice(pos, pos + self.q(j))
                pos += self.q(j)
        return out, pos

    @property
    def n_free(self) -> int:
        return self._slices()[1]

    def param_names(self) -> list[str]:
        names = ["theta"]
        for j in (1, 2):
            names += [f"{p}{j}" for p in self.base(j).param_names()]
        for j in (1, 2):
            names += [f"beta{j}S[{i + 1}]" for i in range(self.q(j))]
            if self.has_long:
                names += [f"beta{j}L[{i + 1}]" for i in range(self.q(j))]
        return names

    def positive_mask(self) -> np.ndarray:
        """True for coordinates whose natural value is exp(packed)."""
        sl, k = self._slices()
        mask = np.zeros(k, dtype=bool)
        mask[sl["kappa1"]] = True
        mask[sl["kappa2"]] = True
        return mask

    # -- packing --------------------------------------------------------------

    def pack(self, params: ParamSet) -> np.ndarray:
        copulas.check_theta(self.family, params.theta)
        sl, k = self._slices()
        z = np.empty(k)
        z[sl["theta"]] = theta_to_link(self.family, params.theta)
        for j in (1, 2):
            kap = self.base(j).validate(params.kappa(j))
            z[sl[f"kappa{j}"]] = np.log(kap)
            bS, bL = params.beta(j)
            if bS.size != self.q(j):
                raise ValueError(f"beta{j}S: expected {self.q(j)} coefficients")
            RegressionSpec(self.regression, bS, bL if bL.size == bS.size else None)
            z[sl[f"beta{j}S"]] = bS
            if self.has_long:
                z[sl[f"beta{j}L"]] = bL
        return z

    def unpack(self, z) -> ParamSet:
        theta, kappas, betas = self._unpack_batch(np.atleast_2d(np.asarray(z, dtype=float)))
        return ParamSet(
            theta[0, 0],
            kappas[0][0],
            kappas[1][0],
            betas[0][0][0],
            betas[0][1][0],
            betas[1][0][0],
            betas[1][1][0],
        )

    def _unpack_batch(self, Z):
        sl, k = self._slices()
        if Z.shape[1] != k:
            raise ValueError(f"expected {k} packed parameters, got {Z.shape[1]}")
        theta = link_to_theta(self.family, Z[:, sl["theta"]])
        kappas = [np.exp(Z[:, sl[f"kappa{j}"]]) for j in (1, 2)]
        betas = []
        for j in (1, 2):
            bS = Z[:, sl[f"beta{j}S"]]
            if self.regression is RegressionClass.YP:
                bL = Z[:, sl[f"beta{j}L"]]
            elif self.regression is RegressionClass.PH:
                bL = bS
            else:
                bL = np.zeros_like(bS)
            betas.append((bS, bL))
        return theta, kappas, betas

    # -- margins --------------------------------------------------------------

    def margin_baseline(self, params: ParamSet, j: int) -> Baseline:
        return Baseline(self.base(j), params.kappa(j))

    def margin_regression(self, params: ParamSet, j: int) -> RegressionSpec:
        bS, bL = params.beta(j)
        return RegressionSpec(self.regression, bS, None if self.regression is not RegressionClass.YP else bL)

    def copula(self, params: ParamSet) -> copulas.Copula:
        return copulas.Copula(self.family, params.theta)

    # -- likelihood -----------------------------------------------------------

    def prepare(self, data: SurvivalData) -> _Prepared:
        if data.X1.shape[1] != self.q1 or data.X2.shape[1] != self.q2:
            raise ValueError("covariate dimensions do not match the model")
        designs = []
        for j in (1, 2):
            y, _, _ = data.margin(j)
            base = self.base(j)
            if np.any(y > base.max_time() * (1 + 1e-12)):
                raise ValueError(f"margin {j}: times beyond the baseline horizon {base.max_time()}")
            designs.append(base.design(y) if y.size else None)
        d1, d2 = data.d1, data.d2
        patterns = {
            (a, b): np.flatnonzero((d1 == a) & (d2 == b)) for a in (0, 1) for b in (0, 1)
        }
        return _Prepared(data.n, tuple(designs), (data.X1, data.X2), (d1, d2), patterns)

    def loglik_matrix(self, Z, prep: _Prepared, return_clamps: bool = False):
        """Per-cluster log-likelihood, shape ``(B, n)``, for packed ``Z`` of shape ``(B, k)``."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        B = Z.shape[0]
        if prep.n == 0:
            out = np.zeros((B, 0))
            return (out, 0) if return_clamps else out
        theta, kappas, betas = self._unpack_batch(Z)
        with np.errstate(all="ignore"):
            log_u, log_f = [], []
            for j in (0, 1):
                base = self.base(j + 1)
                log_h0, H0 = base.evaluate(kappas[j], prep.designs[j])
                X = prep.X[j]
                eta_s = betas[j][0] @ X.T
                eta_l = betas[j][1] @ X.T
                ls = log_yp_survival(H0, eta_s, eta_l)
                lh = log_yp_hazard(log_h0, H0, eta_s, eta_l)
                log_f.append(ls + lh)
                log_u.append(ls)
            clamps = 0
            for j in (0, 1):
                lu = log_u[j]
                low = lu < _LOG_U_MIN
                high = lu > _LOG_U_MAX
                clamps += int(np.count_nonzero(low | high))
                log_u[j] = np.clip(lu, _LOG_U_MIN, _LOG_U_MAX)

            kernel = copulas.log_kernels
            out = np.empty((B, prep.n))
            for (a, b), idx in prep.patterns.items():
                if idx.size == 0:
                    continue
                lu1 = log_u[0][:, idx]
                lu2 = log_u[1][:, idx]
                if (a, b) == (0, 1):
                    # dC/du2 (u1, u2) is the u-partial with arguments swapped
                    terms = kernel(self.family, theta, lu2, lu1)
                else:
                    terms = kernel(self.family, theta, lu1, lu2)
                if (a, b) == (0, 0):
                    val = terms[0]
                elif (a, b) == (1, 0):
                    val = terms[1] + log_f[0][:, idx]
                elif (a, b) == (0, 1):
                    val = terms[1] + log_f[1][:, idx]
                else:
                    val = terms[2] + log_f[0][:, idx] + log_f[1][:, idx]
                out[:, idx] = val
        out[~np.isfinite(out)] = -np.inf
        return (out, clamps) if return_clamps else out

    def loglik_batch(self, Z, prep: _Prepared) -> np.ndarray:
        """Total log-likelihood for each row of ``Z``; -inf where not finite."""
        ll = self.loglik_matrix(Z, prep)
        # fixed sequential order per row: deterministic regardless of batching
        return np.add.reduce(ll, axis=1)


# ---------------------------------------------------------------------------
# public scalar API


def cluster_loglik(model: Model, params: ParamSet, data: SurvivalData) -> np.ndarray:
    """Per-cluster log-likelihood contributions; raises on non-finite values."""
    z = model.pack(params)
    ll = model.loglik_matrix(z[None, :], model.prepare(data))[0]
    bad = np.flatnonzero(~np.isfinite(ll))
    if bad.size:
        raise NonFiniteLikelihoodError(bad)
    return ll


def total_loglik(model: Model, params: ParamSet, data: SurvivalData) -> float:
    return float(np.sum(cluster_loglik(model, params, data)))


def marginal_loglik(reg: RegressionSpec, baseline: Baseline, y, d, X) -> float:
    """Censored YP log-likelihood of one margin: sum d log h + log S."""
    y = np.asarray(y, dtype=float)
    d = np.asarray(d)
    eta_s, eta_l = reg.linear_predictors(np.asarray(X, dtype=float).reshape(y.size, -1))
    log_h0 = np.asarray(baseline.log_hazard(y))
    H0 = np.asarray(baseline.cum_hazard(y))
    ls = log_yp_survival(H0, eta_s, eta_l)
    lh = log_yp_hazard(log_h0, H0, eta_s, eta_l)
    return float(np.sum(np.where(d == 1, lh, 0.0) + ls))
