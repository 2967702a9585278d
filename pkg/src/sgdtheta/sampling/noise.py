"""Noise models and noise-level bookkeeping.

Exact data are stored per equation as a ``(N, m)`` array. Three models:

* Gaussian: ``y_i + delta_rel ||y_i||_2 eps_i`` with standard normal ``eps_i``
* Uniform:  same scaling, ``eps_i`` uniform on ``[-1, 1]``
* SaltPepper: each datum is replaced by the global maximum with probability
  ``kappa/2``, by the global minimum with probability ``kappa/2``, and kept
  otherwise.

For the additive models the a-priori level ``delta_rel ||y_i||_2`` is kept
next to the realized ``||y_i^delta - y_i||_r``.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..spaces import lr_norm
from .rng import CounterRNG

__all__ = ["NoiseModel", "NoiseSpec", "NoisyDataset", "apply_noise"]


class NoiseModel(str, enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    SALT_PEPPER = "salt_pepper"


@dataclass(frozen=True)
class NoiseSpec:
    model: NoiseModel = NoiseModel.GAUSSIAN
    delta_rel: float = 0.0
    kappa: float = 0.0
    r: float = 2.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", NoiseModel(self.model))
        if self.model is NoiseModel.SALT_PEPPER:
            if not 0.0 <= self.kappa <= 1.0:
                raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")
        elif not self.delta_rel >= 0:
            raise ValueError(f"delta_rel must be nonnegative, got {self.delta_rel}")


def _row_norms(a, r, weights):
    return np.array([lr_norm(row, r, weights) for row in a])


@dataclass(eq=False)
class NoisyDataset:
    """Exact and noisy data with per-equation noise levels.

    Attributes
    ----------
    exact, noisy : ndarray, shape (N, m)
    r : float
        Exponent of the stored realized levels ``delta``.
    delta : ndarray
        Realized ``||y_i^delta - y_i||_r``.
    apriori : ndarray or None
        ``delta_rel ||y_i||_2`` for the additive models.
    weights : ndarray or None
        Data-space quadrature weights.
    """

    exact: np.ndarray
    noisy: np.ndarray
    r: float
    delta: np.ndarray
    apriori: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    spec: Optional[NoiseSpec] = None

    @property
    def n_equations(self):
        return self.exact.shape[0]

    def realized_levels(self, r=None):
        r = self.r if r is None else r
        return _row_norms(self.noisy - self.exact, r, self.weights)

    def levels(self, r=None, use_apriori=True):
        """Per-equation levels used for discrepancy gating."""
        if use_apriori and self.apriori is not None:
            return self.apriori.copy()
        if r is None or r == self.r:
            return self.delta.copy()
        return self.realized_levels(r)

    def total_level(self, r=None, use_apriori=True):
        r = self.r if r is None else r
        d = self.levels(r, use_apriori)
        return float(np.sum(d ** r) ** (1.0 / r))


def apply_noise(spec, exact, weights=None):
    """Corrupt ``exact`` (shape ``(N, m)`` or ``(N,)``) according to ``spec``."""
    exact = np.asarray(exact, dtype=float)
    if exact.size == 0:
        raise ValueError("empty dataset")
    if exact.ndim == 1:
        exact = exact[:, None]
    if not np.all(np.isfinite(exact)):
        raise ValueError("exact data must be finite")
    n_eq, m = exact.shape
    rng = CounterRNG(spec.seed, f"noise/{spec.model.value}")
    apriori = None
    if spec.model is NoiseModel.SALT_PEPPER:
        u = rng.uniform_block(0, exact.size).reshape(exact.shape)
        noisy = exact.copy()
        half = spec.kappa / 2.0
        noisy[u < half] = exact.max()
        noisy[(u >= half) & (u < spec.kappa)] = exact.min()
    else:
        if spec.model is NoiseModel.GAUSSIAN:
            eps = rng.normal_block(0, exact.size).reshape(exact.shape)
        else:
            eps = 2.0 * rng.uniform_block(0, exact.size).reshape(exact.shape) - 1.0
        apriori = spec.delta_rel * _row_norms(exact, 2.0, weights)
        noisy = exact + apriori[:, None] * eps
    delta = _row_norms(noisy - exact, spec.r, weights)
    return NoisyDataset(exact, noisy, spec.r, delta, apriori, weights, spec)
