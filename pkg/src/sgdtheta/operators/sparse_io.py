"""Sparse matrix import/export.

Binary container (all little-endian, 64 bit)::

    u64 rows, u64 cols, u64 nnz
    i64 offsets[rows + 1]
    i64 indices[nnz]
    f64 values[nnz]

Matrix Market text files go through :mod:`scipy.io`.
"""

import numpy as np
import scipy.io
import scipy.sparse as sp

from .tomo import SparseRowBlock

__all__ = ["write_sparse_binary", "read_sparse_binary", "write_matrix_market", "read_matrix_market"]


def write_sparse_binary(path, block):
    with open(path, "wb") as fh:
        fh.write(np.array([block.rows, block.cols, block.nnz], dtype="<u8").tobytes())
        fh.write(block.offsets.astype("<i8").tobytes())
        fh.write(block.indices.astype("<i8").tobytes())
        fh.write(block.values.astype("<f8").tobytes())


def read_sparse_binary(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    rows, cols, nnz = (int(v) for v in np.frombuffer(raw, dtype="<u8", count=3))
    expected = 8 * (3 + rows + 1 + 2 * nnz)
    if len(raw) != expected:
        raise ValueError(f"{path}: size {len(raw)} bytes does not match header ({expected} expected)")
    pos = 24
    offsets = np.frombuffer(raw, dtype="<i8", count=rows + 1, offset=pos)
    pos += 8 * (rows + 1)
    indices = np.frombuffer(raw, dtype="<i8", count=nnz, offset=pos)
    pos += 8 * nnz
    values = np.frombuffer(raw, dtype="<f8", count=nnz, offset=pos)
    return SparseRowBlock(offsets.copy(), indices.copy(), values.copy(), rows, cols)


def write_matrix_market(path, block):
    scipy.io.mmwrite(str(path), block.to_csr().tocoo(), precision=17)


def read_matrix_market(path):
    return SparseRowBlock.from_scipy(sp.csr_matrix(scipy.io.mmread(str(path))))
