"""Convex penalties, Bregman distances and the mirror step.

Three strongly convex (p = 2) penalties are provided:

* ``QUADRATIC``        theta(x) = 1/2 ||x||^2
* ``QUADRATIC_NONNEG`` theta(x) = 1/2 ||x||^2 + indicator(x >= 0)
* ``QUADRATIC_TV``     theta(x) = 1/(2 beta) ||x||^2 + |x|_TV

The mirror step ``x = argmin_z theta(z) - <xi, z>`` is closed form for the
first two. For the TV penalty it is the ROF denoising problem

    argmin_z 1/(2 beta) ||z - beta xi||^2 + |z|_TV

which is solved by a primal-dual hybrid gradient (Chambolle-Pock) iteration.
TV is isotropic with forward differences, unit spacing and a zero gradient
across the image boundary.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .exceptions import DimensionMismatchError, InfeasibleTargetError, NumericalFailure

__all__ = [
    "PenaltyVariant",
    "PenaltySpec",
    "PdhgConfig",
    "PdhgState",
    "BregmanPair",
    "grad2d",
    "grad2d_adjoint",
    "tv_norm",
    "penalty_value",
    "penalty_conjugate",
    "bregman_distance",
    "mirror_step",
    "tv_denoise_pdhg",
    "tv_objective",
]

GRAD_NORM_BOUND = math.sqrt(8.0)


class PenaltyVariant(str, enum.Enum):
    QUADRATIC = "quadratic"
    QUADRATIC_NONNEG = "quadratic_nonneg"
    QUADRATIC_TV = "quadratic_tv"


@dataclass(frozen=True)
class PenaltySpec:
    """Description of the penalty ``theta``.

    Attributes
    ----------
    variant : PenaltyVariant
    dim : int
        Length of the coefficient vector.
    beta : float
        TV weight; only used by ``QUADRATIC_TV``.
    grid : tuple of int, optional
        ``(rows, cols)`` image shape; required for ``QUADRATIC_TV``.
    """

    variant: PenaltyVariant
    dim: int
    beta: float = 1.0
    grid: Optional[Tuple[int, int]] = None
    p: int = field(default=2, init=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", PenaltyVariant(self.variant))
        if self.dim < 1:
            raise ValueError("penalty dimension must be positive")
        if self.variant is PenaltyVariant.QUADRATIC_TV:
            if not self.beta > 0:
                raise ValueError(f"TV weight beta must be positive, got {self.beta}")
            if self.grid is None or self.grid[0] * self.grid[1] != self.dim:
                raise DimensionMismatchError("QUADRATIC_TV needs a grid with rows*cols == dim")

    @property
    def sigma(self):
        """Convexity modulus in ``D(x_bar, x) >= sigma ||x_bar - x||^2``."""
        if self.variant is PenaltyVariant.QUADRATIC_TV:
            return 1.0 / (2.0 * self.beta)
        return 0.5

    @classmethod
    def quadratic(cls, dim):
        return cls(PenaltyVariant.QUADRATIC, dim)

    @classmethod
    def nonneg(cls, dim):
        return cls(PenaltyVariant.QUADRATIC_NONNEG, dim)

    @classmethod
    def tv(cls, grid, beta):
        grid = (int(grid[0]), int(grid[1]))
        return cls(PenaltyVariant.QUADRATIC_TV, grid[0] * grid[1], beta=float(beta), grid=grid)


@dataclass(frozen=True)
class PdhgConfig:
    """Stopping and step parameters of the TV subproblem solver."""

    max_iters: int = 200
    gap_tol: float = 1e-3
    tau_primal: float = 1.0 / GRAD_NORM_BOUND
    sigma_dual: float = 1.0 / GRAD_NORM_BOUND

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not (self.tau_primal > 0 and self.sigma_dual > 0):
            raise ValueError("PDHG step sizes must be positive")
        if self.tau_primal * self.sigma_dual * 8.0 > 1.0 + 1e-12:
            raise ValueError("PDHG step sizes violate tau*sigma*||grad||^2 <= 1")


class PdhgState:
    """Warm-start handle for repeated TV solves on one grid.

    Holds the last dual field; owned by the caller (one per solver run).
    """

    def __init__(self):
        self.dual = None
        self.last_iters = 0
        self.last_gap = float("nan")


@dataclass(frozen=True)
class BregmanPair:
    """Primal iterate ``x`` with a subgradient ``xi`` of theta at ``x``."""

    x: np.ndarray
    xi: np.ndarray


# -- discrete gradient -------------------------------------------------------

def grad2d(u):
    """Forward-difference gradient, shape ``(2, rows, cols)``; last row/col get 0."""
    g = np.zeros((2,) + u.shape)
    g[0, :-1, :] = u[1:, :] - u[:-1, :]
    g[1, :, :-1] = u[:, 1:] - u[:, :-1]
    return g


def grad2d_adjoint(p):
    """Adjoint of :func:`grad2d` (negative divergence)."""
    p0, p1 = p[0], p[1]
    out = np.zeros(p.shape[1:])
    out[:-1, :] -= p0[:-1, :]
    out[1:, :] += p0[:-1, :]
    out[:, :-1] -= p1[:, :-1]
    out[:, 1:] += p1[:, :-1]
    return out


def tv_norm(u):
    """Isotropic total variation of a 2D array."""
    g = grad2d(np.asarray(u, dtype=float))
    return float(np.sqrt(g[0] ** 2 + g[1] ** 2).sum())


def _project_unit_ball(p):
    mag = np.sqrt(p[0] ** 2 + p[1] ** 2)
    np.maximum(mag, 1.0, out=mag)
    return p / mag


def tv_objective(z, g, beta):
    """``1/(2 beta) ||z - g||^2 + |z|_TV`` for 2D arrays."""
    d = z - g
    return float(np.dot(d.ravel(), d.ravel()) / (2.0 * beta) + tv_norm(z))


# -- penalty evaluation ------------------------------------------------------

def _as_vector(spec, x, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != spec.dim:
        raise DimensionMismatchError(f"{name} has shape {x.shape}, expected ({spec.dim},)")
    return x


def penalty_value(spec, x):
    """Evaluate ``theta(x)``; returns ``math.inf`` outside the domain."""
    x = _as_vector(spec, x)
    sq = float(np.dot(x, x))
    if spec.variant is PenaltyVariant.QUADRATIC:
        return 0.5 * sq
    if spec.variant is PenaltyVariant.QUADRATIC_NONNEG:
        if np.any(x < 0):
            return math.inf
        return 0.5 * sq
    return sq / (2.0 * spec.beta) + tv_norm(x.reshape(spec.grid))


def penalty_conjugate(spec, xi, pdhg=None):
    """Fenchel conjugate ``theta*(xi) = <xi, x> - theta(x)`` at the mirror point."""
    xi = _as_vector(spec, xi, "xi")
    if spec.variant is PenaltyVariant.QUADRATIC:
        return 0.5 * float(np.dot(xi, xi))
    if spec.variant is PenaltyVariant.QUADRATIC_NONNEG:
        pos = np.maximum(xi, 0.0)
        return 0.5 * float(np.dot(pos, pos))
    x = mirror_step(spec, xi, pdhg).x
    return float(np.dot(xi, x)) - penalty_value(spec, x)


def bregman_distance(spec, target, pair):
    """``D_xi theta(target, x) = theta(target) - theta(x) - <xi, target - x>``.

    Evaluated in a cancellation-free form: the quadratic part contributes
    ``sigma ||target - x||^2`` explicitly.
    """
    t = _as_vector(spec, target, "target")
    x = _as_vector(spec, pair.x, "pair.x")
    xi = _as_vector(spec, pair.xi, "pair.xi")
    if spec.variant is PenaltyVariant.QUADRATIC_NONNEG:
        if np.any(t < 0):
            raise InfeasibleTargetError("target violates the nonnegativity constraint")
        if np.any(x < 0):
            raise InfeasibleTargetError("pair.x violates the nonnegativity constraint")
    d = t - x
    if spec.variant is PenaltyVariant.QUADRATIC_TV:
        b = spec.beta
        rest = tv_norm(t.reshape(spec.grid)) - tv_norm(x.reshape(spec.grid)) - float(np.dot(xi - x / b, d))
        return float(np.dot(d, d)) / (2.0 * b) + rest
    return 0.5 * float(np.dot(d, d)) + float(np.dot(x - xi, d))


# -- mirror step -------------------------------------------------------------

def mirror_step(spec, xi, pdhg=None, state=None):
    """Map a dual iterate to the primal: ``x = argmin theta(z) - <xi, z>``.

    Parameters
    ----------
    spec : PenaltySpec
    xi : ndarray
        Dual vector of length ``spec.dim``.
    pdhg : PdhgConfig, optional
        TV subproblem settings (defaults to 200 iterations / gap 1e-3).
    state : PdhgState, optional
        Warm-start handle reused across calls.

    Returns
    -------
    BregmanPair
        ``(x, xi)``; ``xi`` is returned as the subgradient of theta at ``x``.
    """
    xi = _as_vector(spec, xi, "xi")
    if not np.all(np.isfinite(xi)):
        raise NumericalFailure("non-finite dual iterate passed to mirror_step")
    if spec.variant is PenaltyVariant.QUADRATIC:
        return BregmanPair(xi.copy(), xi.copy())
    if spec.variant is PenaltyVariant.QUADRATIC_NONNEG:
        return BregmanPair(np.maximum(xi, 0.0), xi.copy())
    g = (spec.beta * xi).reshape(spec.grid)
    z = tv_denoise_pdhg(g, spec.beta, pdhg or PdhgConfig(), state=state)
    return BregmanPair(z.ravel(), xi.copy())


def tv_denoise_pdhg(g, beta, cfg=None, state=None):
    """Solve ``argmin_z 1/(2 beta) ||z - g||^2 + |z|_TV`` by PDHG.

    Stops when the relative duality gap ``(P - D) / max(1, |P|)`` drops
    below ``cfg.gap_tol`` or after ``cfg.max_iters`` iterations. Among the
    last primal iterate, the primal point recovered from the dual and ``g``
    itself, the one with the smallest objective is returned, so the output
    never has a larger objective than ``g``.

    Parameters
    ----------
    g : ndarray, shape (rows, cols)
    beta : float
    cfg : PdhgConfig, optional
    state : PdhgState, optional
        If given, the dual field is read for warm start and updated.
    """
    cfg = cfg or PdhgConfig()
    g = np.asarray(g, dtype=float)
    if g.ndim != 2:
        raise DimensionMismatchError("tv_denoise_pdhg expects a 2D image")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite input image")

    tau, sig = cfg.tau_primal, cfg.sigma_dual
    if state is not None and state.dual is not None and state.dual.shape == (2,) + g.shape:
        p = state.dual.copy()
    else:
        p = np.zeros((2,) + g.shape)
    # primal start consistent with the dual keeps mean(z) == mean(g)
    z = g - beta * grad2d_adjoint(p)
    z_bar = z.copy()
    gap = math.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        p = _project_unit_ball(p + sig * grad2d(z_bar))
        z_new = (beta * (z - tau * grad2d_adjoint(p)) + tau * g) / (beta + tau)
        z_bar = 2.0 * z_new - z
        z = z_new

        kp = grad2d_adjoint(p)
        primal = tv_objective(z, g, beta)
        dual = float(np.dot(g.ravel(), kp.ravel()) - 0.5 * beta * np.dot(kp.ravel(), kp.ravel()))
        if not (math.isfinite(primal) and math.isfinite(dual)):
            raise NumericalFailure(f"PDHG produced non-finite values at iteration {it}")
        gap = (primal - dual) / max(1.0, abs(primal))
        if gap < cfg.gap_tol:
            break

    if state is not None:
        state.dual = p
        state.last_iters = it
        state.last_gap = gap

    candidates = (z, g - beta * grad2d_adjoint(p), g)
    values = [tv_objective(c, g, beta) for c in candidates]
    return candidates[int(np.argmin(values))].copy()
