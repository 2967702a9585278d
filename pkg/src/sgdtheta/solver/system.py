"""A system of forward equations together with its (noisy) data."""

import numpy as np

from ..exceptions import DimensionMismatchError
from ..spaces import lr_norm

__all__ = ["EquationSystem"]


class EquationSystem:
    """``F_i(x) = y_i^delta`` for ``i < N`` with noise levels.

    Parameters
    ----------
    operator : BlockOperator
    noisy : ndarray, shape (N, m)
        Data used by the solver.
    levels : ndarray, shape (N,), optional
        Noise levels ``delta_i`` for gating; zeros if omitted.
    dataset : NoisyDataset, optional
        Source of ``noisy``/``levels``; lets the solver pick a-priori or
        realized levels in the norm it works with.
    """

    def __init__(self, operator, noisy, levels=None, dataset=None):
        noisy = np.asarray(noisy, dtype=float)
        if noisy.ndim == 1:
            noisy = noisy[:, None]
        if noisy.shape != (operator.n_equations, operator.eq_dim):
            raise DimensionMismatchError(
                f"data shape {noisy.shape} does not match operator ({operator.n_equations}, {operator.eq_dim})"
            )
        self.operator = operator
        self.noisy = noisy
        self.dataset = dataset
        self._levels = np.zeros(operator.n_equations) if levels is None else np.asarray(levels, dtype=float)

    @classmethod
    def from_dataset(cls, operator, dataset):
        return cls(operator, dataset.noisy, dataset.levels(), dataset)

    @property
    def n_equations(self):
        return self.operator.n_equations

    @property
    def weights(self):
        return self.operator.data_weights

    def levels(self, r, use_apriori=True):
        """Per-equation noise levels measured in the ``r`` norm."""
        if self.dataset is not None:
            return self.dataset.levels(r, use_apriori)
        return self._levels.copy()

    def residual(self, x, idx):
        """Stacked ``F_i(x) - y_i^delta``, shape ``(len(idx), m)``."""
        return self.operator.apply(x, idx) - self.noisy[idx]

    def residual_norms(self, x, r):
        """``||F_i(x) - y_i^delta||_r`` for every equation."""
        res = self.residual(x, self.operator.all_indices())
        if res.shape[1] == 1:
            return np.abs(res[:, 0])
        w = self.weights
        return np.array([lr_norm(row, r, w) for row in res])

    def total_sq_residual(self, x, r=2.0):
        """``sum_i ||F_i(x) - y_i^delta||_r^2``."""
        rn = self.residual_norms(x, r)
        return float(np.dot(rn, rn))
