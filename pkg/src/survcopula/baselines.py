"""Baseline hazard models: Weibull, exponentiated Weibull, Bernstein polynomial
and piecewise exponential.

A :class:`BaselineSpec` carries the structural part of a model (BP degree and
horizon, PE cut points) and knows how to evaluate ``(log h0, H0)`` for a batch
of parameter vectors ``kappa`` of shape ``(B, k)`` against a precomputed time
design. :class:`Baseline` binds a spec to one parameter vector and provides the
usual survival quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

__all__ = [
    "BaselineDomainError",
    "BaselineSpec",
    "WeibullSpec",
    "ExpWeibullSpec",
    "BernsteinSpec",
    "PiecewiseSpec",
    "Baseline",
    "weibull",
    "exp_weibull",
    "bernstein",
    "piecewise_exponential",
    "bp_basis",
    "structural_size",
    "pe_grid_from_times",
]


class BaselineDomainError(ValueError):
    """Time or parameter outside the baseline's domain."""


def structural_size(n: int) -> int:
    """Smallest integer m with m >= n**(2/5), computed exactly."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    m = max(1, math.ceil(n**0.4) - 1)
    while m**5 < n * n:
        m += 1
    while m > 1 and (m - 1) ** 5 >= n * n:
        m -= 1
    return m


def _log1mexp(lx):
    """log(1 - exp(lx)) for lx < 0."""
    lx = np.asarray(lx, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(lx > -0.693, np.log(-np.expm1(lx)), np.log1p(-np.exp(lx)))


def _check_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise BaselineDomainError("times must be finite and strictly positive")
    return t


def bp_basis(m: int, upsilon: float, t):
    """Bernstein basis ``(g, G)`` at times ``t``, each of shape ``(m,) + t.shape``.

    ``g[k-1]`` is the Beta(k, m-k+1) density of t/upsilon scaled by 1/upsilon and
    ``G[k-1]`` the matching regularized incomplete Beta function.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > upsilon * (1 + 1e-12)):
        raise BaselineDomainError(f"Bernstein basis defined on [0, {upsilon}]")
    x = np.clip(t / upsilon, 0.0, 1.0)
    k = np.arange(1, m + 1).reshape((m,) + (1,) * x.ndim)
    a, b = k, m - k + 1
    with np.errstate(divide="ignore"):
        log_pdf = (
            special.xlogy(a - 1, x)
            + special.xlog1py(b - 1, -x)
            - special.betaln(a, b)
        )
    g = np.exp(log_pdf) / upsilon
    G = special.betainc(a, b, x)
    return g, G


def pe_grid_from_times(times, p: int) -> np.ndarray:
    """Cut points e_1 < ... < e_p at empirical quantiles k/p of ``times``."""
    times = np.sort(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ValueError("need at least one event time for the grid")
    grid = np.quantile(times, np.arange(1, p + 1) / p)
    grid = np.unique(grid[grid > 0])
    if grid.size < p:
        # ties collapsed some quantiles; pad with evenly spaced points
        grid = np.linspace(times[-1] / p, times[-1], p)
    return grid


# ---------------------------------------------------------------------------


class BaselineSpec:
    """Structural description of a baseline family."""

    name: str = ""
    n_params: int = 0

    def param_names(self) -> list[str]:
        raise NotImplementedError

    def design(self, t):
        """Precompute time-dependent quantities for :meth:`evaluate`."""
        raise NotImplementedError

    def evaluate(self, kappa, design):
        """Return ``(log h0, H0)`` with shape ``(B, n)`` for ``kappa`` of shape ``(B, k)``."""
        raise NotImplementedError

    def cum_hazard_inverse(self, kappa, H):
        raise NotImplementedError

    def max_time(self) -> float:
        return math.inf

    def validate(self, kappa) -> np.ndarray:
        kappa = np.asarray(kappa, dtype=float).reshape(-1)
        if kappa.size != self.n_params:
            raise ValueError(f"{self.name}: expected {self.n_params} parameters, got {kappa.size}")
        if np.any(~(kappa > 0)) or np.any(~np.isfinite(kappa)):
            raise BaselineDomainError(f"{self.name}: parameters must be finite and positive")
        return kappa


@dataclass(frozen=True)
class WeibullSpec(BaselineSpec):
    """h(t) = lam * alpha * t**(alpha - 1), kappa = (alpha, lam)."""

    name = "weibull"
    n_params = 2

    def param_names(self):
        return ["alpha", "lambda"]

    def design(self, t):
        return np.log(_check_times(t))

    def evaluate(self, kappa, design):
        kappa = np.atleast_2d(kappa)
        alpha = kappa[:, 0:1]
        lam = kappa[:, 1:2]
        logt = np.asarray(design)[None, :]
        H = lam * np.exp(alpha * logt)
        log_h = np.log(lam) + np.log(alpha) + (alpha - 1.0) * logt
        return log_h, H

    def cum_hazard_inverse(self, kappa, H):
        alpha, lam = kappa
        return (np.asarray(H, dtype=float) / lam) ** (1.0 / alpha)


@dataclass(frozen=True)
class ExpWeibullSpec(BaselineSpec):
    """F(t) = (1 - exp(-lam * t**alpha))**xi, kappa = (alpha, lam, xi)."""

    name = "expweibull"
    n_params = 3

    def param_names(self):
        return ["alpha", "lambda", "xi"]

    def design(self, t):
        return np.log(_check_times(t))

    def evaluate(self, kappa, design):
        kappa = np.atleast_2d(kappa)
        alpha, lam, xi = kappa[:, 0:1], kappa[:, 1:2], kappa[:, 2:3]
        logt = np.asarray(design)[None, :]
        z = lam * np.exp(alpha * logt)
        log_g = _log1mexp(-z)  # log(1 - e^{-z})
        log_s = _log1mexp(xi * log_g)  # log S = log(1 - F)
        H = -log_s
        log_f = np.log(xi) + (xi - 1.0) * log_g - z + np.log(lam) + np.log(alpha) + (alpha - 1.0) * logt
        return log_f - log_s, H

    def cum_hazard_inverse(self, kappa, H):
        alpha, lam, xi = kappa
        H = np.asarray(H, dtype=float)
        with np.errstate(divide="ignore"):
            log_F = _log1mexp(-H)
            z = -_log1mexp(log_F / xi)
        return (z / lam) ** (1.0 / alpha)


@dataclass(frozen=True)
class BernsteinSpec(BaselineSpec):
    """h(t) = gamma' g_m(t) on [0, upsilon], kappa = gamma (length m)."""

    degree: int
    upsilon: float
    name = "bp"

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("Bernstein degree must be >= 1")
        if not self.upsilon > 0:
            raise ValueError("upsilon must be positive")

    @property
    def n_params(self):
        return self.degree

    def param_names(self):
        return [f"gamma{k}" for k in range(1, self.degree + 1)]

    def max_time(self):
        return self.upsilon

    def design(self, t):
        t = _check_times(t)
        if np.any(t > self.upsilon):
            raise BaselineDomainError(f"bp: times beyond horizon upsilon={self.upsilon}")
        return bp_basis(self.degree, self.upsilon, t)

    def evaluate(self, kappa, design):
        kappa = np.atleast_2d(kappa)
        g, G = design
        with np.errstate(divide="ignore"):
            return np.log(kappa @ g), kappa @ G

    def cum_hazard_inverse(self, kappa, H):
        H = np.asarray(H, dtype=float)
        total = float(np.sum(kappa))
        if np.any(H > total * (1 + 1e-12)):
            raise BaselineDomainError("bp: cumulative hazard exceeds H(upsilon)")

        def solve(h):
            if h <= 0:
                return 0.0
            if h >= total:
                return self.upsilon
            fn = lambda t: float(kappa @ bp_basis(self.degree, self.upsilon, t)[1]) - h
            return optimize.brentq(fn, 0.0, self.upsilon, xtol=1e-15, rtol=1e-15)

        out = np.vectorize(solve, otypes=[float])(H)
        return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class PiecewiseSpec(BaselineSpec):
    """Piecewise-constant hazard on (e_{k-1}, e_k]; the last rate continues past e_p."""

    grid: tuple
    name = "pe"

    def __post_init__(self):
        grid = tuple(float(e) for e in self.grid)
        if len(grid) < 1 or grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("PE grid must be positive and strictly increasing")
        object.__setattr__(self, "grid", grid)

    @property
    def n_params(self):
        return len(self.grid)

    def param_names(self):
        return [f"rate{k}" for k in range(1, len(self.grid) + 1)]

    def _edges(self):
        return np.concatenate([[0.0], self.grid])

    def design(self, t):
        t = _check_times(t)
        edges = self._edges()
        width = np.diff(edges)
        width[-1] = np.inf
        exposure = np.clip(t[None, :] - edges[:-1, None], 0.0, width[:, None])
        idx = np.minimum(np.searchsorted(np.asarray(self.grid), t, side="left"), len(self.grid) - 1)
        return exposure, idx

    def evaluate(self, kappa, design):
        kappa = np.atleast_2d(kappa)
        exposure, idx = design
        return np.log(kappa[:, idx]), kappa @ exposure

    def cum_hazard_inverse(self, kappa, H):
        H = np.asarray(H, dtype=float)
        edges = self._edges()
        rates = np.asarray(kappa, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(rates[:-1] * np.diff(edges)[:-1])])
        k = np.clip(np.searchsorted(cum, H, side="right") - 1, 0, len(rates) - 1)
        return edges[k] + (H - cum[k]) / rates[k]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Baseline:
    """A baseline model with fixed parameters."""

    spec: BaselineSpec
    kappa: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kappa", self.spec.validate(self.kappa))

    def _eval(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > self.spec.max_time() * (1 + 1e-12)):
            raise BaselineDomainError(f"{self.spec.name}: time beyond horizon {self.spec.max_time()}")
        flat = _check_times(t).reshape(-1)
        log_h, H = self.spec.evaluate(self.kappa[None, :], self.spec.design(flat))
        return log_h[0].reshape(t.shape), H[0].reshape(t.shape)

    @staticmethod
    def _out(x):
        x = np.asarray(x)
        return x.item() if x.ndim == 0 else x

    def hazard(self, t):
        return self._out(np.exp(self._eval(t)[0]))

    def log_hazard(self, t):
        return self._out(self._eval(t)[0])

    def cum_hazard(self, t):
        return self._out(self._eval(t)[1])

    def survival(self, t):
        return self._out(np.exp(-self._eval(t)[1]))

    def density(self, t):
        log_h, H = self._eval(t)
        return self._out(np.exp(log_h - H))

    def odds(self, t):
        return self._out(np.expm1(self._eval(t)[1]))

    def odds_deriv(self, t):
        log_h, H = self._eval(t)
        return self._out(np.exp(log_h + H))

    def cum_hazard_inverse(self, H):
        H = np.asarray(H, dtype=float)
        if np.any(H < 0):
            raise BaselineDomainError("cumulative hazard must be >= 0")
        return self._out(self.spec.cum_hazard_inverse(self.kappa, H))


def weibull(alpha: float, lam: float) -> Baseline:
    return Baseline(WeibullSpec(), np.array([alpha, lam], dtype=float))


def exp_weibull(alpha: float, lam: float, xi: float) -> Baseline:
    return Baseline(ExpWeibullSpec(), np.array([alpha, lam, xi], dtype=float))


def bernstein(gamma, upsilon: float) -> Baseline:
    gamma = np.asarray(gamma, dtype=float)
    return Baseline(BernsteinSpec(gamma.size, float(upsilon)), gamma)


def piecewise_exponential(rates, grid) -> Baseline:
    return Baseline(PiecewiseSpec(tuple(grid)), np.asarray(rates, dtype=float))
