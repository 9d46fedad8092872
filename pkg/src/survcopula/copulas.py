"""Bivariate Archimedean copulas: AMH, Clayton, Frank, Gumbel-Hougaard and Joe.

The likelihood works with log survival probabilities, so every family exposes
three log-space kernels taking ``(theta, log u, log v)``:

* ``log_cdf``      log C(u, v)
* ``log_partial``  log dC/du (the conditional law of V given U = u)
* ``log_density``  log d2C/(du dv)

``theta`` broadcasts against ``log u``/``log v``, which lets the estimation
code evaluate many parameter vectors in a single call.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

__all__ = [
    "Family",
    "Copula",
    "CopulaDomainError",
    "UnattainableTauError",
    "debye1",
    "kendall_tau",
    "tau_inverse",
    "tau_range",
    "log_cdf",
    "log_partial",
    "log_density",
]

# Below this |theta| the Frank kernels switch to a second-order expansion
# around independence.
FRANK_TAYLOR_CUTOFF = 1e-5


class CopulaDomainError(ValueError):
    """Dependence parameter or argument outside the family domain."""


class UnattainableTauError(ValueError):
    """Requested Kendall's tau cannot be produced by the family."""


class Family(str, enum.Enum):
    AMH = "AMH"
    CLAYTON = "Clayton"
    FRANK = "Frank"
    GH = "GH"
    JOE = "Joe"

    @classmethod
    def parse(cls, value: "Family | str") -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if member.value.lower() == key or member.name.lower() == key:
                return member
        if key in {"gumbel", "gumbel-hougaard"}:
            return cls.GH
        raise ValueError(f"unknown copula family {value!r}")

    def __str__(self) -> str:
        return self.value


def check_theta(family: Family, theta: float, dim: int = 2) -> float:
    """Validate ``theta`` for ``family`` in dimension ``dim`` and return it as float."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise CopulaDomainError(f"{family}: theta must be finite, got {theta}")
    if family is Family.AMH:
        lo = -1.0 if dim == 2 else 0.0
        ok = lo <= theta <= 1.0
        domain = "[-1, 1]" if dim == 2 else "[0, 1]"
    elif family is Family.CLAYTON:
        ok = theta > 0.0
        domain = "(0, inf)"
    elif family is Family.FRANK:
        # theta == 0 is the removable independence point
        ok = True if dim == 2 else theta > 0.0
        domain = "R" if dim == 2 else "(0, inf)"
    else:
        ok = theta >= 1.0
        domain = "[1, inf)"
    if not ok:
        raise CopulaDomainError(f"{family}: theta={theta} outside {domain} (d={dim})")
    return theta


# ---------------------------------------------------------------------------
# log-space kernels, bivariate


def _log1mexp(lx):
    """log(1 - exp(lx)) for lx <= 0."""
    lx = np.asarray(lx, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(lx > -0.693, np.log(-np.expm1(lx)), np.log1p(-np.exp(lx)))


def _amh(theta, lu, lv):
    ubar = -np.expm1(lu)
    vbar = -np.expm1(lv)
    log_d = np.log1p(-theta * ubar * vbar)
    log_c = lu + lv - log_d
    log_p = lv + np.log1p(-theta * vbar) - 2.0 * log_d
    num = 1.0 + theta * (1.0 - 2.0 * ubar - 2.0 * vbar + ubar * vbar) + theta**2 * ubar * vbar
    log_dens = np.log(num) - 3.0 * log_d
    return log_c, log_p, log_dens


def _clayton(theta, lu, lv):
    log_a = np.log1p(np.expm1(-theta * lu) + np.expm1(-theta * lv))
    log_c = -log_a / theta
    log_p = -(theta + 1.0) * lu - (1.0 / theta + 1.0) * log_a
    log_dens = np.log1p(theta) - (theta + 1.0) * (lu + lv) - (1.0 / theta + 2.0) * log_a
    return log_c, log_p, log_dens


def _frank(theta, lu, lv):
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < FRANK_TAYLOR_CUTOFF
    t = np.where(small, 1.0, theta)
    u = np.exp(lu)
    v = np.exp(lv)
    eu = np.expm1(-t * u)
    ev = np.expm1(-t * v)
    e1 = np.expm1(-t)
    den = e1 + eu * ev
    log_c = np.log(-np.log1p(eu * ev / e1) / t)
    log_p = -t * u + np.log(ev / den)
    log_dens = np.log(-t * e1) - t * (u + v) - 2.0 * np.log(np.abs(den))

    # second-order expansion around independence
    ubar = -np.expm1(lu)
    vbar = -np.expm1(lv)
    a = 2.0 * u - 1.0
    b = 2.0 * v - 1.0
    th = np.where(small, theta, 0.0)
    log_c0 = lu + lv + np.log1p(th * ubar * vbar / 2.0 + th**2 * ubar * vbar * a * b / 12.0)
    log_p0 = lv + np.log1p(
        -th * a * vbar / 2.0 - th**2 * vbar * b * (6.0 * u * u - 6.0 * u + 1.0) / 12.0
    )
    log_d0 = np.log1p(
        th * a * b / 2.0
        + th**2 * (6.0 * u * u - 6.0 * u + 1.0) * (6.0 * v * v - 6.0 * v + 1.0) / 12.0
    )
    return (
        np.where(small, log_c0, log_c),
        np.where(small, log_p0, log_p),
        np.where(small, log_d0, log_dens),
    )


def _gh(theta, lu, lv):
    lx = np.log(-lu)
    ly = np.log(-lv)
    log_a = np.logaddexp(theta * lx, theta * ly)
    w = np.exp(log_a / theta)
    log_c = -w
    log_p = -w + (1.0 / theta - 1.0) * log_a + (theta - 1.0) * lx - lu
    log_dens = (
        -w
        - lu
        - lv
        + (theta - 1.0) * (lx + ly)
        + (2.0 / theta - 2.0) * log_a
        + np.log1p((theta - 1.0) / w)
    )
    return log_c, log_p, log_dens


def _joe(theta, lu, lv):
    lub = _log1mexp(lu)
    lvb = _log1mexp(lv)
    a = np.exp(theta * lub)
    b = np.exp(theta * lvb)
    big_a = a + b * (1.0 - a)
    log_a = np.log(big_a)
    log_c = _log1mexp(log_a / theta)
    log_p = (1.0 / theta - 1.0) * log_a + (theta - 1.0) * lub + np.log1p(-b)
    log_dens = (
        (1.0 / theta - 2.0) * log_a + (theta - 1.0) * (lub + lvb) + np.log(theta - 1.0 + big_a)
    )
    return log_c, log_p, log_dens


_KERNELS = {
    Family.AMH: _amh,
    Family.CLAYTON: _clayton,
    Family.FRANK: _frank,
    Family.GH: _gh,
    Family.JOE: _joe,
}


def log_kernels(family: Family, theta, lu, lv):
    """Return ``(log C, log dC/du, log c)`` at log-arguments ``lu``, ``lv``."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return _KERNELS[family](theta, np.asarray(lu, float), np.asarray(lv, float))


def log_cdf(family: Family, theta, lu, lv):
    return log_kernels(family, theta, lu, lv)[0]


def log_partial(family: Family, theta, lu, lv):
    """log dC/du evaluated at (u, v) = (exp(lu), exp(lv))."""
    return log_kernels(family, theta, lu, lv)[1]


def log_density(family: Family, theta, lu, lv):
    return log_kernels(family, theta, lu, lv)[2]


# ---------------------------------------------------------------------------
# Kendall's tau


def debye1(x: float) -> float:
    """First-order Debye function D1(x) = (1/x) * int_0^x a / (e^a - 1) da."""
    x = float(x)
    if x == 0.0:
        return 1.0

    def integrand(a):
        return 1.0 if a == 0.0 else a / math.expm1(a)

    val, _ = integrate.quad(integrand, 0.0, x, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val / x


def kendall_tau(family: Family | str, theta: float) -> float:
    """Kendall's tau of the bivariate copula as a closed function of theta."""
    family = Family.parse(family)
    theta = check_theta(family, theta)
    if family is Family.CLAYTON:
        return theta / (theta + 2.0)
    if family is Family.GH:
        return (theta - 1.0) / theta
    if family is Family.AMH:
        if theta == 1.0:
            return 1.0 / 3.0
        if abs(theta) < 1e-3:
            return 2 * theta / 9 + theta**2 / 18 + theta**3 / 45 + theta**4 / 90
        return (3 * theta - 2) / (3 * theta) - 2 * (1 - theta) ** 2 * math.log1p(-theta) / (
            3 * theta**2
        )
    if family is Family.FRANK:
        if abs(theta) < 1e-4:
            return theta / 9.0 - theta**3 / 900.0
        return 1.0 + 4.0 / theta * (debye1(theta) - 1.0)
    # Joe: removable singularity at theta = 2
    if abs(theta - 2.0) < 1e-6:
        x = 2.0 / theta + 1.0
        return 1.0 - 2.0 * float(special.polygamma(1, 0.5 * (2.0 + x))) / theta
    return 1.0 + 2.0 / (2.0 - theta) * (special.digamma(2.0) - special.digamma(2.0 / theta + 1.0))


AMH_TAU_MIN = (5.0 - 8.0 * math.log(2.0)) / 3.0
AMH_TAU_MAX = 1.0 / 3.0


def tau_range(family: Family | str) -> tuple[float, float]:
    """Closed range of Kendall's tau attainable by ``family``."""
    family = Family.parse(family)
    if family is Family.AMH:
        return AMH_TAU_MIN, AMH_TAU_MAX
    if family is Family.FRANK:
        return -1.0, 1.0
    return 0.0, 1.0


def tau_inverse(family: Family | str, tau: float, *, clamp: bool = True) -> float:
    """Dependence parameter theta with ``kendall_tau(family, theta) == tau``.

    AMH cannot exceed tau = 1/3; with ``clamp`` the target is truncated to that
    limit with a warning instead of raising.
    """
    family = Family.parse(family)
    tau = float(tau)
    lo, hi = tau_range(family)
    if family is Family.AMH and tau > hi and clamp:
        warnings.warn(f"AMH cannot reach tau={tau}; truncated to 1/3", stacklevel=2)
        return 1.0
    if family is Family.AMH:
        ok = lo <= tau <= hi
    elif family is Family.CLAYTON:
        ok = 0.0 < tau < 1.0
    elif family is Family.FRANK:
        ok = -1.0 < tau < 1.0
    else:
        ok = 0.0 <= tau < 1.0
    if not ok:
        raise UnattainableTauError(f"{family}: tau={tau} outside attainable range [{lo}, {hi}]")

    if family is Family.CLAYTON:
        return 2.0 * tau / (1.0 - tau)
    if family is Family.GH:
        return 1.0 / (1.0 - tau)
    if tau == 0.0 and family is not Family.AMH:
        return 0.0 if family is Family.FRANK else 1.0
    if family is Family.AMH:
        if tau == lo:
            return -1.0
        if tau == hi:
            return 1.0
        a, b = -1.0, 1.0
    elif family is Family.FRANK:
        a, b = (0.0, 10.0) if tau > 0 else (-10.0, 0.0)
        while (kendall_tau(family, b if tau > 0 else a) - tau) * (1 if tau > 0 else -1) < 0:
            if tau > 0:
                a, b = b, 2 * b
            else:
                a, b = 2 * a, a
    else:
        a, b = 1.0, 4.0
        while kendall_tau(family, b) < tau:
            a, b = b, 2 * b

    return optimize.brentq(
        lambda th: kendall_tau(family, th) - tau, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps
    )


# ---------------------------------------------------------------------------
# generators


def _generator(family, theta, w):
    with np.errstate(divide="ignore", over="ignore"):
        return _generator_raw(family, theta, w)


def _generator_raw(family, theta, w):
    if family is Family.AMH:
        return (1.0 - theta) / (np.exp(w) - theta)
    if family is Family.CLAYTON:
        return np.exp(-np.log1p(theta * w) / theta)
    if family is Family.FRANK:
        if abs(theta) < FRANK_TAYLOR_CUTOFF:
            return np.exp(-w)
        return -np.log1p(np.expm1(-theta) * np.exp(-w)) / theta
    if family is Family.GH:
        return np.exp(-(w ** (1.0 / theta)))
    return -np.expm1(np.log(-np.expm1(-w)) / theta)


def _generator_inverse(family, theta, u):
    with np.errstate(divide="ignore"):
        if family is Family.AMH:
            return np.log1p(-theta * (1.0 - u)) - np.log(u)
        if family is Family.CLAYTON:
            return np.expm1(-theta * np.log(u)) / theta
        if family is Family.FRANK:
            if abs(theta) < FRANK_TAYLOR_CUTOFF:
                return -np.log(u)
            return -np.log(np.expm1(-theta * u) / np.expm1(-theta))
        if family is Family.GH:
            return (-np.log(u)) ** theta
        return -np.log1p(-((1.0 - u) ** theta))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Copula:
    """A bivariate Archimedean copula with a fixed dependence parameter.

    >>> Copula("Clayton", 2.0).cdf([0.5, 0.5])
    0.3779644730092272
    """

    family: Family
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "theta", check_theta(self.family, self.theta))

    # generator -------------------------------------------------------------

    def _check_generator(self):
        if self.family is Family.AMH and self.theta == 1.0:
            raise CopulaDomainError("AMH generator degenerates at theta=1")

    def generator(self, w):
        """psi_theta(w) for w >= 0."""
        self._check_generator()
        w = np.asarray(w, dtype=float)
        if np.any(w < 0):
            raise CopulaDomainError("generator argument must be >= 0")
        out = _generator(self.family, self.theta, w)
        return out.item() if out.ndim == 0 else out

    def generator_inverse(self, u):
        """psi_theta^{-1}(u) for u in (0, 1]; u = 0 maps to +inf."""
        self._check_generator()
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)):
            raise CopulaDomainError("generator inverse argument must lie in [0, 1]")
        out = np.where(u == 1.0, 0.0, _generator_inverse(self.family, self.theta, u))
        return out.item() if out.ndim == 0 else out

    # distribution ----------------------------------------------------------

    def cdf(self, u):
        """C(u_1, ..., u_d). The last axis of ``u`` indexes the dimension."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] < 2:
            raise ValueError("copula needs at least two arguments")
        if np.any((u < 0) | (u > 1)):
            raise CopulaDomainError("copula arguments must lie in [0, 1]")
        d = u.shape[-1]
        if d == 2:
            out = self._cdf2(u[..., 0], u[..., 1])
        else:
            check_theta(self.family, self.theta, dim=d)
            out = self._cdf_general(u)
        out = np.asarray(out)
        return out.item() if out.ndim == 0 else out

    def _cdf2(self, u, v):
        with np.errstate(divide="ignore"):
            lu, lv = np.log(u), np.log(v)
        inner = (u > 0) & (u < 1) & (v > 0) & (v < 1)
        lu_s = np.where(inner, lu, -0.5)
        lv_s = np.where(inner, lv, -0.5)
        val = np.exp(log_cdf(self.family, self.theta, lu_s, lv_s))
        out = np.where(inner, val, np.minimum(u, v))
        return np.where((u == 0) | (v == 0), 0.0, out)

    def _cdf_general(self, u):
        th = self.theta
        fam = self.family
        d = u.shape[-1]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if fam is Family.AMH:
                out = (1 - th) / (np.prod((1 - th * (1 - u)) / u, axis=-1) - th)
            elif fam is Family.CLAYTON:
                s = np.sum(u**-th, axis=-1) - (d - 1)
                out = np.maximum(s, 0.0) ** (-1.0 / th)
            elif fam is Family.FRANK:
                num = np.prod(-np.expm1(-th * u), axis=-1)
                out = -np.log1p(-num / (-np.expm1(-th)) ** (d - 1)) / th
            elif fam is Family.GH:
                out = np.exp(-np.sum((-np.log(u)) ** th, axis=-1) ** (1.0 / th))
            else:
                out = 1 - (1 - np.prod(1 - (1 - u) ** th, axis=-1)) ** (1.0 / th)
        return np.where(np.any(u == 0, axis=-1), 0.0, out)

    def _check_open(self, *args):
        arrs = [np.asarray(a, dtype=float) for a in args]
        for a in arrs:
            if np.any((a <= 0) | (a >= 1)):
                raise CopulaDomainError("arguments must lie strictly inside (0, 1)")
        return arrs

    def partial(self, u1, u2, wrt: int = 1):
        """dC/du_wrt, i.e. the conditional cdf of the other margin."""
        u1, u2 = self._check_open(u1, u2)
        if wrt == 1:
            out = np.exp(log_partial(self.family, self.theta, np.log(u1), np.log(u2)))
        elif wrt == 2:
            out = np.exp(log_partial(self.family, self.theta, np.log(u2), np.log(u1)))
        else:
            raise ValueError("wrt must be 1 or 2")
        return out.item() if out.ndim == 0 else out

    def density(self, u1, u2):
        u1, u2 = self._check_open(u1, u2)
        out = np.exp(log_density(self.family, self.theta, np.log(u1), np.log(u2)))
        return out.item() if out.ndim == 0 else out

    def kendall_tau(self) -> float:
        return kendall_tau(self.family, self.theta)

    # sampling --------------------------------------------------------------

    def conditional_inverse(self, u1, v):
        """Solve dC/du1(u1, u2) = v for u2 (inverse conditional cdf)."""
        u1 = np.asarray(u1, dtype=float)
        v = np.asarray(v, dtype=float)
        th = self.theta
        fam = self.family
        if fam is Family.CLAYTON:
            # u2 = [(v^{-th/(1+th)} - 1) u1^{-th} + 1]^{-1/th}, in log form
            a = np.expm1(-th / (1 + th) * np.log(v)) * np.exp(-th * np.log(u1))
            return np.exp(-np.log1p(a) / th)
        if fam is Family.FRANK:
            if abs(th) < FRANK_TAYLOR_CUTOFF:
                return self._bisect_conditional(u1, v)
            e1 = np.expm1(-th)
            return -np.log1p(v * e1 / (v + (1 - v) * np.exp(-th * u1))) / th
        if fam is Family.AMH:
            a = 1.0 - u1
            b = 1.0 - th * a
            c = th * a
            qa = v * c * c - th
            qb = 2.0 * v * b * c - (1.0 - th)
            qc = v * b * b
            disc = np.sqrt(np.maximum(qb * qb - 4.0 * qa * qc, 0.0))
            return 2.0 * qc / (-qb + disc)
        return self._bisect_conditional(u1, v)

    def _bisect_conditional(self, u1, v, tol=1e-12):
        lu1 = np.log(u1)
        lo = np.zeros(np.broadcast(u1, v).shape)
        hi = np.ones_like(lo)
        target = np.log(v)
        while np.max(hi - lo) > tol:
            mid = 0.5 * (lo + hi)
            val = log_partial(self.family, self.theta, lu1, np.log(mid))
            below = val < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` pairs by the conditional-distribution method, shape (n, 2)."""
        u1 = rng.uniform(size=n)
        v = rng.uniform(size=n)
        # keep away from exact 0/1 where the conditional law is degenerate
        eps = 1e-15
        u1 = np.clip(u1, eps, 1 - eps)
        v = np.clip(v, eps, 1 - eps)
        u2 = np.clip(self.conditional_inverse(u1, v), eps, 1 - eps)
        return np.column_stack([u1, u2])
