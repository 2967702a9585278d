"""Matrix-free ``(I - Laplacian)`` on a square grid and its CG inverse.

Grid nodes ``x_j = -1 + j h``, ``h = 2 / (n - 1)``; all ``n^2`` nodes are
unknowns and the 5-point stencil reads zero from ghost nodes outside the
grid (homogeneous Dirichlet data).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exceptions import ConvergenceError, NumericalFailure

__all__ = ["PoissonSolveConfig", "helmholtz_apply", "poisson_solve", "conjugate_gradient"]


@dataclass(frozen=True)
class PoissonSolveConfig:
    cg_tol: float = 1e-10
    cg_max_iters: Optional[int] = None

    def __post_init__(self):
        if not self.cg_tol > 0:
            raise ValueError("cg_tol must be positive")

    def max_iters(self, n):
        return self.cg_max_iters if self.cg_max_iters is not None else 10 * n * n


def grid_spacing(n):
    return 2.0 / (n - 1)


def helmholtz_apply(u, h):
    """``(I - Delta_h) u`` for a 2D array ``u``."""
    lap = -4.0 * u
    lap[1:, :] += u[:-1, :]
    lap[:-1, :] += u[1:, :]
    lap[:, 1:] += u[:, :-1]
    lap[:, :-1] += u[:, 1:]
    return u - lap / (h * h)


def conjugate_gradient(apply_a, b, tol, max_iters):
    """Plain CG for an SPD operator; relative residual ``||r|| <= tol ||b||``.

    Returns ``(x, iterations)``.
    """
    if not np.all(np.isfinite(b)):
        raise NumericalFailure("non-finite right-hand side passed to CG")
    x = np.zeros_like(b)
    bnorm = np.sqrt(np.vdot(b, b).real)
    if bnorm == 0.0:
        return x, 0
    r = b.copy()
    p = r.copy()
    rr = np.vdot(r, r).real
    target = (tol * bnorm) ** 2
    for k in range(1, max_iters + 1):
        ap = apply_a(p)
        alpha = rr / np.vdot(p, ap).real
        x += alpha * p
        r -= alpha * ap
        rr_new = np.vdot(r, r).real
        if rr_new <= target:
            return x, k
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise ConvergenceError(
        f"CG reached {max_iters} iterations with relative residual {np.sqrt(rr) / bnorm:.3e} > {tol:.1e}"
    )


def poisson_solve(w, cfg=None):
    """Solve ``(I - Delta_h) u = w``.

    ``w`` is an ``(n, n)`` grid or its flattening; the result has the same shape.
    """
    cfg = cfg or PoissonSolveConfig()
    w = np.asarray(w, dtype=float)
    shape = w.shape
    if w.ndim == 1:
        n = int(round(np.sqrt(w.size)))
        if n * n != w.size:
            raise ValueError("flat input must have a square number of entries")
        w = w.reshape(n, n)
    elif w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("poisson_solve expects a square grid")
    n = w.shape[0]
    h = grid_spacing(n)
    u, _ = conjugate_gradient(lambda v: helmholtz_apply(v, h), w, cfg.cg_tol, cfg.max_iters(n))
    return u.reshape(shape)
