"""Forward operator abstractions.

A system ``F_i(x) = y_i, i = 0..N-1`` is represented by a
:class:`BlockOperator`, which evaluates any subset of equations at once and
returns the stacked result as a ``(len(idx), eq_dim)`` array. Single
equations are exposed through :meth:`BlockOperator.equation` for code that
wants the per-equation contract (``apply``, ``derivative_apply``,
``derivative_adjoint``).
"""

import numpy as np

__all__ = ["BlockOperator", "EquationView"]


class BlockOperator:
    """Base class for a family of forward maps sharing one domain.

    Subclasses set ``n_equations``, ``eq_dim``, ``in_dim``, ``is_linear`` and
    ``data_weights`` and implement :meth:`apply`, :meth:`derivative_apply`
    and :meth:`adjoint_sum`.
    """

    n_equations: int
    eq_dim: int
    in_dim: int
    is_linear: bool = False
    data_weights = None

    def apply(self, x, idx):
        """Stacked ``F_i(x)`` for ``i`` in ``idx``; shape ``(len(idx), eq_dim)``."""
        raise NotImplementedError

    def derivative_apply(self, x, h, idx):
        """Stacked ``F_i'(x) h``."""
        raise NotImplementedError

    def adjoint_sum(self, x, idx, g):
        """``sum_{i in idx} F_i'(x)^* g_i`` with ``g`` of shape ``(len(idx), eq_dim)``.

        Terms are accumulated in the order of ``idx``.
        """
        raise NotImplementedError

    def all_indices(self):
        return np.arange(self.n_equations)

    def equation(self, i):
        return EquationView(self, int(i))


class EquationView:
    """Single-equation view ``F_i`` of a :class:`BlockOperator`."""

    def __init__(self, block, i):
        if not 0 <= i < block.n_equations:
            raise IndexError(f"equation index {i} out of range")
        self.block = block
        self.i = i
        self.out_dim = block.eq_dim
        self.is_linear = block.is_linear

    def apply(self, x):
        return self.block.apply(x, [self.i])[0]

    def derivative_apply(self, x, h):
        return self.block.derivative_apply(x, h, [self.i])[0]

    def derivative_adjoint(self, x, g):
        g = np.asarray(g, dtype=float).reshape(1, self.out_dim)
        return self.block.adjoint_sum(x, [self.i], g)
