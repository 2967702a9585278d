"""Schlieren forward operator ``F_i(f) = (R_i f)^2``.

``f`` is given by its values on the ``n x n`` node grid over ``D = [-1, 1]^2``
(``f[i, j] = f(x_j, y_i)``) and is extended by bilinear interpolation inside
``D`` and by zero outside. ``R_i f(s) = int f(s sigma_i + r sigma_i^perp) dr``
is discretized by the composite midpoint rule in ``r`` with a step no larger
than the grid spacing, at detector offsets spanning ``[-sqrt 2, sqrt 2]``.
Detector data live in ``L^2`` with trapezoidal weights.

Inner products: ``<u, v>_{L2(D)} = h^2 sum u v``; the domain carries the
``H^1_0`` product ``<(I - Delta_h) u, v>_{L2(D)}``. With ``A_i`` the assembled
quadrature matrix and ``W`` the detector weights, ``R_i^* = h^-2 A_i^T W`` is the
exact discrete adjoint, and ``F_i'(f)^* g = (I - Delta_h)^{-1} 2 R_i^*(g R_i f)``.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..exceptions import DimensionMismatchError
from .base import BlockOperator
from .poisson import PoissonSolveConfig, conjugate_gradient, grid_spacing, helmholtz_apply

__all__ = [
    "SchlierenOperator",
    "SchlierenSystem",
    "schlieren_radon",
    "schlieren_apply",
    "schlieren_derivative_apply",
    "schlieren_derivative_adjoint",
    "default_detector_count",
]

DETECTOR_HALF_WIDTH = math.sqrt(2.0)


def default_detector_count(n):
    return int(round(1.5 * n))


def _trapezoid_weights(s):
    ds = np.diff(s)
    w = np.zeros_like(s)
    w[:-1] += 0.5 * ds
    w[1:] += 0.5 * ds
    return w


def _bilinear_matrix(px, py, n):
    """Sparse ``(len(px), n*n)`` interpolation matrix; rows for points outside D are empty."""
    h = grid_spacing(n)
    m = px.size
    inside = (px >= -1.0) & (px <= 1.0) & (py >= -1.0) & (py <= 1.0)
    fx = (px + 1.0) / h
    fy = (py + 1.0) / h
    j0 = np.clip(np.floor(fx).astype(np.int64), 0, n - 2)
    i0 = np.clip(np.floor(fy).astype(np.int64), 0, n - 2)
    wx = np.clip(fx - j0, 0.0, 1.0)
    wy = np.clip(fy - i0, 0.0, 1.0)
    rows = np.repeat(np.arange(m), 4)
    cols = np.stack([i0 * n + j0, i0 * n + j0 + 1, (i0 + 1) * n + j0, (i0 + 1) * n + j0 + 1], axis=1)
    vals = np.stack([(1 - wy) * (1 - wx), (1 - wy) * wx, wy * (1 - wx), wy * wx], axis=1)
    vals = vals * inside[:, None]
    mat = sp.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(m, n * n))
    mat.eliminate_zeros()
    return mat


@dataclass(frozen=True, eq=False)
class SchlierenOperator:
    """One recording direction ``sigma = (cos phi, sin phi)``.

    Attributes
    ----------
    phi : float
        Direction angle in radians.
    n : int
        Grid nodes per axis.
    offsets : ndarray
        Detector offsets ``s_j`` in ``[-sqrt 2, sqrt 2]``.
    weights : ndarray
        Trapezoidal quadrature weights of the detector ``L^2`` norm.
    matrix : scipy.sparse.csr_matrix
        ``A`` with ``(A f)_j ~ R f(s_j)``.
    """

    phi: float
    n: int
    offsets: np.ndarray
    weights: np.ndarray
    matrix: sp.csr_matrix

    @classmethod
    def build(cls, phi, n, n_detectors=None):
        if n < 3:
            raise ValueError("schlieren grid needs n >= 3")
        n_det = n_detectors or default_detector_count(n)
        h = grid_spacing(n)
        s = np.linspace(-DETECTOR_HALF_WIDTH, DETECTOR_HALF_WIDTH, n_det)
        n_r = int(math.ceil(2.0 * DETECTOR_HALF_WIDTH / h))
        dr = 2.0 * DETECTOR_HALF_WIDTH / n_r
        r = -DETECTOR_HALF_WIDTH + (np.arange(n_r) + 0.5) * dr
        c, si = math.cos(phi), math.sin(phi)
        # points s*sigma + r*sigma_perp, detector-major
        px = (s[:, None] * c - r[None, :] * si).ravel()
        py = (s[:, None] * si + r[None, :] * c).ravel()
        interp = _bilinear_matrix(px, py, n)
        summation = sp.kron(sp.identity(n_det, format="csr"), np.full((1, n_r), dr), format="csr")
        a = (summation @ interp).tocsr()
        a.sort_indices()
        return cls(float(phi), int(n), s, _trapezoid_weights(s), a)

    @property
    def direction(self):
        return np.array([math.cos(self.phi), math.sin(self.phi)])

    @property
    def h(self):
        return grid_spacing(self.n)

    @property
    def n_detectors(self):
        return self.offsets.size

    def backproject(self, g):
        """``R^* g`` as a flat grid vector (exact adjoint of the quadrature)."""
        return (self.matrix.T @ (self.weights * g)) / (self.h * self.h)


def _flat(op, f, name="f"):
    f = np.asarray(f, dtype=float)
    if f.size != op.n * op.n:
        raise DimensionMismatchError(f"{name} has {f.size} entries, expected {op.n * op.n}")
    return f.reshape(-1)


def schlieren_radon(op, f):
    """Discrete line integrals ``R f(s_j)`` for all detectors."""
    return op.matrix @ _flat(op, f)


def schlieren_apply(op, f):
    rf = schlieren_radon(op, f)
    return rf * rf


def schlieren_derivative_apply(op, f, h):
    return 2.0 * schlieren_radon(op, f) * schlieren_radon(op, h)


def schlieren_derivative_adjoint(op, f, g, cfg=None):
    """``(I - Delta_h)^{-1} 2 R^*(g R f)`` as a flat grid vector."""
    g = np.asarray(g, dtype=float)
    if g.shape != (op.n_detectors,):
        raise DimensionMismatchError(f"g has shape {g.shape}, expected ({op.n_detectors},)")
    w = 2.0 * op.backproject(g * schlieren_radon(op, f))
    return _h1_riesz(w, op.n, cfg)


def _h1_riesz(w, n, cfg):
    cfg = cfg or PoissonSolveConfig()
    h = grid_spacing(n)
    u, _ = conjugate_gradient(lambda v: helmholtz_apply(v, h), w.reshape(n, n), cfg.cg_tol, cfg.max_iters(n))
    return u.ravel()


class SchlierenSystem(BlockOperator):
    """``N`` directions ``phi_i = 2 pi i / N`` with a shared grid and detector layout."""

    is_linear = False

    def __init__(self, n, n_directions=None, angles=None, n_detectors=None, poisson=None):
        if angles is None:
            if not n_directions:
                raise ValueError("give n_directions or angles")
            angles = 2.0 * np.pi * np.arange(n_directions) / n_directions
        self.angles = np.asarray(angles, dtype=float)
        self.ops = [SchlierenOperator.build(phi, n, n_detectors) for phi in self.angles]
        self.n = n
        self.n_equations = len(self.ops)
        self.eq_dim = self.ops[0].n_detectors
        self.in_dim = n * n
        self.data_weights = self.ops[0].weights
        self.poisson = poisson or PoissonSolveConfig()

    def apply(self, x, idx):
        return np.stack([schlieren_apply(self.ops[i], x) for i in idx])

    def derivative_apply(self, x, h, idx):
        return np.stack([schlieren_derivative_apply(self.ops[i], x, h) for i in idx])

    def adjoint_sum(self, x, idx, g):
        g = np.asarray(g, dtype=float).reshape(len(idx), self.eq_dim)
        w = np.zeros(self.in_dim)
        for k, i in enumerate(idx):
            op = self.ops[i]
            w += 2.0 * op.backproject(g[k] * schlieren_radon(op, x))
        return _h1_riesz(w, self.n, self.poisson)

    def h1_inner(self, u, v):
        """``<u, v>_{H^1} = h^2 <(I - Delta_h) u, v>``."""
        h = grid_spacing(self.n)
        return float(h * h * np.dot(helmholtz_apply(u.reshape(self.n, self.n), h).ravel(), v.ravel()))
