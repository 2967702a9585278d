"""Finite-dimensional l^r norms, duality mappings and conjugate exponents.

Data spaces are ``(R^m, ||.||_r)`` with an optional positive quadrature
weight per coordinate, i.e. ``||y||_r = (sum_k w_k |y_k|^r)^(1/r)``. The dual
pairing on such a space is ``<eta, y> = sum_k w_k eta_k y_k``, so the duality
mapping keeps the plain componentwise form ``sign(y) |y|^(r-1)`` for any
weights.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import InvalidExponentError

__all__ = [
    "DataSpaceSpec",
    "lr_norm",
    "duality_map",
    "conj_exponent",
    "pairing",
]


@dataclass(frozen=True)
class DataSpaceSpec:
    """Exponent and dimension of one data space ``Y_i``.

    Attributes
    ----------
    r : float
        Norm exponent, ``1 < r < inf``.
    dim : int
        Number of coordinates.
    weights : ndarray, optional
        Positive quadrature weights of length ``dim``; ``None`` means 1.
    """

    r: float
    dim: int
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r <= 1:
            raise InvalidExponentError(f"data space exponent must satisfy 1 < r < inf, got {self.r}")
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.dim,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be a positive finite vector of length dim")

    def norm(self, y):
        return lr_norm(y, self.r, self.weights)

    def duality_map(self, y):
        return duality_map(y, self.r)


def _check_finite(a, name):
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")


def lr_norm(y, r, weights=None):
    """Weighted l^r norm ``(sum_k w_k |y_k|^r)^(1/r)``.

    Parameters
    ----------
    y : array_like
        Nonempty real array; all axes are flattened.
    r : float
        Exponent, ``r >= 1``.
    weights : array_like, optional
        Positive weights broadcastable against ``y``.

    Returns
    -------
    float
    """
    if not r >= 1 or not np.isfinite(r):
        raise InvalidExponentError(f"norm exponent must satisfy 1 <= r < inf, got {r}")
    a = np.abs(np.asarray(y, dtype=float))
    if a.size == 0:
        raise ValueError("norm of an empty vector")
    _check_finite(a, "y")
    w = None if weights is None else np.broadcast_to(np.asarray(weights, dtype=float), a.shape)
    scale = a.max()
    if scale == 0.0:
        return 0.0
    if r == 2:
        s = a / scale
        s = s * s
    else:
        s = np.power(a / scale, r)
    if w is not None:
        s = s * w
    return float(scale * np.power(s.sum(), 1.0 / r))


def duality_map(y, r):
    """Duality mapping of ``(R^m, ||.||_r)`` with gauge ``t -> t^(r-1)``.

    Returns ``sign(y_k) |y_k|^(r-1)`` componentwise, the gradient of
    ``||y||_r^r / r``. Zero entries map to zero, so ``J_r(0) = 0``.
    """
    if not r > 1 or not np.isfinite(r):
        raise InvalidExponentError(f"duality mapping needs 1 < r < inf, got {r}")
    y = np.asarray(y, dtype=float)
    _check_finite(y, "y")
    if r == 2:
        return y.copy()
    out = np.zeros_like(y)
    nz = y != 0.0
    a = np.abs(y[nz])
    # exp/log form; zero entries handled by the mask above
    out[nz] = np.sign(y[nz]) * np.exp((r - 1.0) * np.log(a))
    return out


def conj_exponent(p):
    """Hoelder conjugate ``p / (p - 1)`` of an exponent ``p > 1``."""
    if not p > 1:
        raise InvalidExponentError(f"conjugate exponent needs p > 1, got {p}")
    if np.isinf(p):
        raise InvalidExponentError("conjugate exponent of infinity is not supported")
    return p / (p - 1.0)


def pairing(eta, y, weights=None):
    """Dual pairing ``sum_k w_k eta_k y_k``."""
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    if weights is None:
        return float(np.dot(eta.ravel(), y.ravel()))
    w = np.broadcast_to(np.asarray(weights, dtype=float), y.shape)
    return float(np.dot(eta.ravel(), (w * y).ravel()))
