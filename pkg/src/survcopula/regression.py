"""Yang-Prentice regression with short- and long-term hazard ratios.

PH (beta_long == beta_short) and PO (beta_long == 0) are constrained cases of
the same parameterization.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .baselines import Baseline

__all__ = [
    "RegressionClass",
    "RegressionSpec",
    "short_long_ratios",
    "log_yp_survival",
    "log_yp_hazard",
    "survival",
    "hazard",
    "density",
    "inverse_survival",
]


class RegressionClass(str, enum.Enum):
    PH = "PH"
    PO = "PO"
    YP = "YP"

    @classmethod
    def parse(cls, value) -> "RegressionClass":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(f"unknown regression class {value!r}") from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RegressionSpec:
    """Regression class plus short/long-term coefficient vectors.

    For PH the long-term vector is tied to the short-term one and for PO it is
    zero; ``beta_long`` may be omitted in both cases.
    """

    cls: RegressionClass
    beta_short: np.ndarray = field(repr=False)
    beta_long: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        cls = RegressionClass.parse(self.cls)
        bs = np.atleast_1d(np.asarray(self.beta_short, dtype=float))
        if cls is RegressionClass.PH:
            bl = bs.copy() if self.beta_long is None else np.atleast_1d(np.asarray(self.beta_long, float))
            if not np.array_equal(bl, bs):
                raise ValueError("PH requires beta_long == beta_short")
        elif cls is RegressionClass.PO:
            bl = np.zeros_like(bs) if self.beta_long is None else np.atleast_1d(np.asarray(self.beta_long, float))
            if np.any(bl != 0):
                raise ValueError("PO requires beta_long == 0")
        else:
            if self.beta_long is None:
                raise ValueError("YP requires beta_long")
            bl = np.atleast_1d(np.asarray(self.beta_long, dtype=float))
        if bl.shape != bs.shape:
            raise ValueError("beta_short and beta_long must have the same length")
        if not (np.all(np.isfinite(bs)) and np.all(np.isfinite(bl))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "cls", cls)
        object.__setattr__(self, "beta_short", bs)
        object.__setattr__(self, "beta_long", bl)

    @property
    def q(self) -> int:
        return self.beta_short.size

    def linear_predictors(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.q:
            raise ValueError(f"covariate dimension {x.shape[-1]} != {self.q}")
        return x @ self.beta_short, x @ self.beta_long


def short_long_ratios(reg: RegressionSpec, x):
    """(phi_S, phi_L) = (exp(x beta_S), exp(x beta_L))."""
    eta_s, eta_l = reg.linear_predictors(x)
    return np.exp(eta_s), np.exp(eta_l)


# ---------------------------------------------------------------------------
# log-space cores shared with the likelihood


def _log1p_odds(H, log_rho):
    """log(1 + rho * (exp(H) - 1)), overflow-safe in H."""
    H = np.asarray(H, dtype=float)
    big = H > 30.0
    Hs = np.where(big, 30.0, H)
    Hl = np.where(big, H, 30.0)
    small_branch = np.log1p(np.exp(log_rho) * np.expm1(Hs))
    large_branch = Hl + log_rho + np.log1p(np.expm1(-log_rho) * np.exp(-Hl))
    return np.where(big, large_branch, small_branch)


def log_yp_survival(H0, eta_s, eta_l):
    """log S = -phi_L * log(1 + (phi_S / phi_L) R0), R0 = exp(H0) - 1."""
    return -np.exp(eta_l) * _log1p_odds(H0, eta_s - eta_l)


def log_yp_hazard(log_h0, H0, eta_s, eta_l):
    """log h = log(phi_S phi_L h0 / (phi_S F0 + phi_L S0))."""
    with np.errstate(divide="ignore"):
        log_f0 = np.log(-np.expm1(-H0))
    return eta_s + eta_l + log_h0 - np.logaddexp(eta_s + log_f0, eta_l - H0)


# ---------------------------------------------------------------------------


def _prepare(reg, x, baseline: Baseline, t):
    eta_s, eta_l = reg.linear_predictors(x)
    log_h0 = baseline.log_hazard(t)
    H0 = baseline.cum_hazard(t)
    return eta_s, eta_l, log_h0, H0


def _out(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def survival(reg: RegressionSpec, x, baseline: Baseline, t):
    eta_s, eta_l, _, H0 = _prepare(reg, x, baseline, t)
    return _out(np.exp(log_yp_survival(H0, eta_s, eta_l)))


def hazard(reg: RegressionSpec, x, baseline: Baseline, t):
    eta_s, eta_l, log_h0, H0 = _prepare(reg, x, baseline, t)
    return _out(np.exp(log_yp_hazard(log_h0, H0, eta_s, eta_l)))


def density(reg: RegressionSpec, x, baseline: Baseline, t):
    eta_s, eta_l, log_h0, H0 = _prepare(reg, x, baseline, t)
    return _out(np.exp(log_yp_hazard(log_h0, H0, eta_s, eta_l) + log_yp_survival(H0, eta_s, eta_l)))


def inverse_survival(reg: RegressionSpec, x, baseline: Baseline, u):
    """Time t with S(t | x) = u, for u in (0, 1)."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u must lie strictly inside (0, 1)")
    eta_s, eta_l = reg.linear_predictors(x)
    # R0 = (phi_L / phi_S) (u^{-1/phi_L} - 1), H0 = log(1 + R0)
    r0 = np.exp(eta_l - eta_s) * np.expm1(-np.log(u) / np.exp(eta_l))
    H0 = np.log1p(r0)
    return _out(baseline.cum_hazard_inverse(H0))
