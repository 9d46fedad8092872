"""Finite-difference derivatives over batched objectives and a BFGS driver.

Objectives here are *batched*: ``f(Z)`` maps an array of shape ``(B, k)`` to
``(B,)``. Every stencil point of a gradient or Hessian is stacked into one
call, which is far cheaper than ``B`` scalar calls for vectorized likelihoods.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

__all__ = ["fd_steps", "fd_gradient", "numerical_hessian", "MinimizeResult", "bfgs_maximize"]


def fd_steps(x, rel_step: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return rel_step * np.maximum(1.0, np.abs(x))


def fd_gradient(f_batch, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a batched scalar function at ``x``."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = fd_steps(x, rel_step)
    # exact representable steps
    h = (x + h) - x
    E = np.diag(h)
    Z = np.vstack([x + E, x - E])
    vals = np.asarray(f_batch(Z), dtype=float)
    return (vals[:k] - vals[k:]) / (2.0 * h)


def numerical_hessian(f_batch, x, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a batched scalar function at ``x``.

    Diagonal entries use the three-point second difference, off-diagonal ones
    the four-point cross stencil; all ``2k**2`` evaluations share one call.
    """
    x = np.asarray(x, dtype=float)
    k = x.size
    h = fd_steps(x, rel_step)
    h = (x + h) - x
    E = np.diag(h)
    iu, ju = np.triu_indices(k, 1)
    pts = [x[None, :], x + E, x - E]
    if iu.size:
        Ei, Ej = E[iu], E[ju]
        pts += [x + Ei + Ej, x + Ei - Ej, x - Ei + Ej, x - Ei - Ej]
    vals = np.asarray(f_batch(np.vstack(pts)), dtype=float)
    f0 = vals[0]
    fp, fm = vals[1 : 1 + k], vals[1 + k : 1 + 2 * k]
    H = np.empty((k, k))
    H[np.diag_indices(k)] = (fp - 2.0 * f0 + fm) / h**2
    if iu.size:
        m = iu.size
        off = vals[1 + 2 * k :].reshape(4, m)
        cross = (off[0] - off[1] - off[2] + off[3]) / (4.0 * h[iu] * h[ju])
        H[iu, ju] = cross
        H[ju, iu] = cross
    return H


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    converged: bool
    reason: str
    n_iter: int
    n_fev: int
    history: list = field(default_factory=list, repr=False)


class _Stop(Exception):
    pass


def bfgs_maximize(
    f_batch,
    x0,
    *,
    grad_tol: float = 1e-5,
    rel_tol: float = 1e-10,
    max_iter: int = 500,
    grad_step: float = 1e-6,
    scale: float = 1.0,
    loose_grad_tol: float = 1e-3,
    patience: int = 3,
) -> MinimizeResult:
    """Maximize ``f`` with BFGS using batched central-difference gradients.

    Converged when the gradient max-norm drops below ``grad_tol`` or the
    relative change of ``f`` stays below ``rel_tol`` for ``patience``
    consecutive iterations while the gradient max-norm is already below
    ``10 * grad_tol`` (a flat stretch far from the optimum is not enough). If the
    line search stalls (finite-precision limit) the run still counts as
    converged when the gradient max-norm is below ``loose_grad_tol``.
    ``scale`` divides the objective internally (e.g. the sample size) so the
    identity initial inverse Hessian is sensible; tolerances refer to the
    unscaled objective.
    """
    x0 = np.asarray(x0, dtype=float)
    counter = {"fev": 0}

    def f_scalar(x):
        counter["fev"] += 1
        v = float(f_batch(x[None, :])[0])
        return -v / scale if np.isfinite(v) else np.inf

    last = {"gmax": np.inf}

    def grad(x):
        counter["fev"] += 2 * x.size
        g = fd_gradient(f_batch, x, grad_step)
        if not np.all(np.isfinite(g)):
            g = np.where(np.isfinite(g), g, 0.0)
        last["gmax"] = float(np.max(np.abs(g))) if g.size else 0.0
        return -g / scale

    f0 = f_scalar(x0)
    if not np.isfinite(f0):
        return MinimizeResult(x0, -np.inf, np.full_like(x0, np.nan), False, "non-finite start", 0, counter["fev"])

    state = {"prev": f0, "reason": None, "quiet": 0}

    def callback(intermediate_result):
        fk = intermediate_result.fun
        gk = last["gmax"]
        small = abs(state["prev"] - fk) <= rel_tol * max(abs(fk), 1e-300) and gk < 10.0 * grad_tol
        state["quiet"] = state["quiet"] + 1 if small else 0
        state["prev"] = fk
        if state["quiet"] >= patience:
            state["reason"] = "relative change"
            raise StopIteration

    with np.errstate(all="ignore"):
        res = optimize.minimize(
            f_scalar,
            x0,
            jac=grad,
            method="BFGS",
            callback=callback,
            options={"gtol": grad_tol / scale, "norm": np.inf, "maxiter": max_iter},
        )
    x = res.x
    g = -grad(x) * scale
    gmax = float(np.max(np.abs(g))) if g.size else 0.0
    if state["reason"] is not None:
        converged, reason = True, state["reason"]
    elif gmax < grad_tol:
        converged, reason = True, "gradient"
    elif res.status == 2 and gmax < loose_grad_tol:
        converged, reason = True, "precision limit"
    else:
        converged, reason = False, str(res.message)
    return MinimizeResult(x, -res.fun * scale, g, converged, reason, int(res.nit), counter["fev"])
