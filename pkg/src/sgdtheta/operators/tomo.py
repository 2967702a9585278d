"""Sparse parallel-beam projector for 2D CT.

The image is ``n x n`` unit pixels covering ``[-n/2, n/2]^2``; pixel
``(row, col)`` has flat index ``row * n + col``, with row 0 at the top
(largest y). A ray at angle ``theta`` (degrees) with detector offset ``s``
is the line ``{s * nu + t * d}``, ``d = (cos theta, sin theta)`` and
``nu = (-sin theta, cos theta)``. Matrix entries are exact ray/pixel
intersection lengths, computed by Siddon-style traversal of the grid lines.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..exceptions import DimensionMismatchError
from .base import BlockOperator

__all__ = [
    "SparseRowBlock",
    "build_parallel_tomo",
    "radon_row_apply",
    "TomoOperator",
    "ray_pixel_lengths",
]

_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class SparseRowBlock:
    """CSR matrix ``(offsets, indices, values)`` of shape ``(rows, cols)``."""

    offsets: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    rows: int
    cols: int

    def __post_init__(self):
        off = np.asarray(self.offsets, dtype=np.int64)
        ind = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "indices", ind)
        object.__setattr__(self, "values", val)
        if off.shape != (self.rows + 1,) or off[0] != 0 or off[-1] != ind.size:
            raise ValueError("offsets must have rows+1 entries running from 0 to nnz")
        if np.any(np.diff(off) < 0):
            raise ValueError("offsets must be nondecreasing")
        if ind.size != val.size:
            raise ValueError("indices and values differ in length")
        if ind.size and (ind.min() < 0 or ind.max() >= self.cols):
            raise ValueError("column index out of range")
        if not np.all(np.isfinite(val)):
            raise ValueError("non-finite matrix values")
        object.__setattr__(self, "_csr", None)

    @property
    def nnz(self):
        return int(self.values.size)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def to_csr(self):
        if self._csr is None:
            m = sp.csr_matrix((self.values, self.indices, self.offsets), shape=self.shape)
            object.__setattr__(self, "_csr", m)
        return self._csr

    @classmethod
    def from_scipy(cls, m):
        m = sp.csr_matrix(m)
        m.sort_indices()
        return cls(m.indptr.astype(np.int64), m.indices.astype(np.int64), m.data.astype(float), *m.shape)

    def transpose(self):
        return SparseRowBlock.from_scipy(self.to_csr().T.tocsr())


def ray_pixel_lengths(n, theta_deg, s):
    """Pixel indices and intersection lengths of one ray with the ``n x n`` grid."""
    th = np.deg2rad(theta_deg)
    d = np.array([np.cos(th), np.sin(th)])
    nu = np.array([-np.sin(th), np.cos(th)])
    p0 = s * nu
    half = n / 2.0
    t_lo, t_hi = -np.inf, np.inf
    for k in range(2):
        if abs(d[k]) < _EPS:
            if p0[k] < -half or p0[k] > half:
                return np.empty(0, np.int64), np.empty(0)
            continue
        a = (-half - p0[k]) / d[k]
        b = (half - p0[k]) / d[k]
        t_lo = max(t_lo, min(a, b))
        t_hi = min(t_hi, max(a, b))
    if t_hi - t_lo <= _EPS:
        return np.empty(0, np.int64), np.empty(0)

    lines = np.arange(n + 1) - half
    ts = [np.array([t_lo, t_hi])]
    for k in range(2):
        if abs(d[k]) >= _EPS:
            tk = (lines - p0[k]) / d[k]
            ts.append(tk[(tk > t_lo) & (tk < t_hi)])
    t = np.sort(np.concatenate(ts))
    keep = np.concatenate(([True], np.diff(t) > _EPS))
    t = t[keep]
    lengths = np.diff(t)
    mid = 0.5 * (t[:-1] + t[1:])
    xm = p0[0] + mid * d[0]
    ym = p0[1] + mid * d[1]
    col = np.clip(np.floor(xm + half).astype(np.int64), 0, n - 1)
    row = np.clip(np.floor(half - ym).astype(np.int64), 0, n - 1)
    return row * n + col, lengths


def detector_offsets(n, n_lines, spacing=None):
    """Evenly spaced detector offsets centred on the origin."""
    if spacing is None:
        spacing = n / n_lines
    return (np.arange(n_lines) - (n_lines - 1) / 2.0) * spacing


def build_parallel_tomo(n, angles, n_lines, spacing=None):
    """Assemble the parallel-beam CT matrix.

    Parameters
    ----------
    n : int
        Image side length in pixels (``n >= 2``).
    angles : sequence of float
        Projection angles in degrees.
    n_lines : int
        Rays per angle.
    spacing : float, optional
        Distance between neighbouring rays; default ``n / n_lines``.

    Returns
    -------
    SparseRowBlock
        ``(len(angles) * n_lines) x n^2`` matrix, rows ordered angle-major.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size == 0:
        raise ValueError("angle list is empty")
    if n < 2:
        raise ValueError("grid size must be at least 2")
    if n_lines < 1:
        raise ValueError("need at least one detector line")
    offs = detector_offsets(n, n_lines, spacing)
    indptr = [0]
    cols, vals = [], []
    for th in angles:
        for s in offs:
            c, v = ray_pixel_lengths(n, th, s)
            if c.size:
                # merge repeated pixels from degenerate corner hits
                uc, inv = np.unique(c, return_inverse=True)
                uv = np.zeros(uc.size)
                np.add.at(uv, inv, v)
                c, v = uc, uv
            cols.append(c)
            vals.append(v)
            indptr.append(indptr[-1] + c.size)
    return SparseRowBlock(
        np.asarray(indptr, dtype=np.int64),
        np.concatenate(cols) if cols else np.empty(0, np.int64),
        np.concatenate(vals) if vals else np.empty(0),
        angles.size * n_lines,
        n * n,
    )


def _row_selection(block, rows):
    if isinstance(rows, slice):
        start, stop, step = rows.indices(block.rows)
        if rows.start is not None and not 0 <= rows.start <= block.rows:
            raise IndexError("row range out of bounds")
        if rows.stop is not None and not 0 <= rows.stop <= block.rows:
            raise IndexError("row range out of bounds")
        return np.arange(start, stop, step)
    idx = np.atleast_1d(np.asarray(rows, dtype=np.int64))
    if idx.size and (idx.min() < 0 or idx.max() >= block.rows):
        raise IndexError("row index out of bounds")
    return idx


def radon_row_apply(block, rows, x):
    """Selected entries of ``F x``.

    Parameters
    ----------
    block : SparseRowBlock
    rows : slice or sequence of int
    x : ndarray of length ``block.cols``
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (block.cols,):
        raise DimensionMismatchError(f"x has shape {x.shape}, expected ({block.cols},)")
    idx = _row_selection(block, rows)
    return block.to_csr()[idx] @ x


class TomoOperator(BlockOperator):
    """Each row of the CT matrix is one scalar equation ``F_i x = y_i``."""

    is_linear = True
    eq_dim = 1
    data_weights = None

    def __init__(self, block):
        self.block = block
        self.matrix = block.to_csr()
        self.n_equations = block.rows
        self.in_dim = block.cols

    @classmethod
    def from_matrix(cls, a):
        """Wrap any dense or scipy sparse matrix; row ``i`` is equation ``i``."""
        return cls(SparseRowBlock.from_scipy(sp.csr_matrix(np.atleast_2d(np.asarray(a, dtype=float))
                                                            if not sp.issparse(a) else a)))

    def _rows(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == self.n_equations and np.array_equal(idx, np.arange(self.n_equations)):
            return self.matrix
        return self.matrix[idx]

    def apply(self, x, idx):
        return (self._rows(idx) @ x).reshape(-1, 1)

    def derivative_apply(self, x, h, idx):
        return self.apply(h, idx)

    def adjoint_sum(self, x, idx, g):
        g = np.asarray(g, dtype=float).reshape(-1)
        return self._rows(idx).T @ g

    def apply_and_adjoint(self, idx):
        """Row subset used by both the forward and the adjoint product."""
        return self._rows(idx)
