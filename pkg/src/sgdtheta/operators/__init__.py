"""Forward operators: sparse parallel-beam CT and the nonlinear schlieren map."""

from .base import BlockOperator, EquationView
from .poisson import PoissonSolveConfig, helmholtz_apply, poisson_solve
from .schlieren import (
    SchlierenOperator,
    SchlierenSystem,
    schlieren_apply,
    schlieren_derivative_adjoint,
    schlieren_derivative_apply,
    schlieren_radon,
)
from .sparse_io import read_matrix_market, read_sparse_binary, write_matrix_market, write_sparse_binary
from .tomo import SparseRowBlock, TomoOperator, build_parallel_tomo, radon_row_apply

__all__ = [
    "BlockOperator",
    "EquationView",
    "PoissonSolveConfig",
    "helmholtz_apply",
    "poisson_solve",
    "SchlierenOperator",
    "SchlierenSystem",
    "schlieren_apply",
    "schlieren_derivative_adjoint",
    "schlieren_derivative_apply",
    "schlieren_radon",
    "read_matrix_market",
    "read_sparse_binary",
    "write_matrix_market",
    "write_sparse_binary",
    "SparseRowBlock",
    "TomoOperator",
    "build_parallel_tomo",
    "radon_row_apply",
]
