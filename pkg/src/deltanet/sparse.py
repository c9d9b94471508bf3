"""Column-compressed weights and the delta-driven sparse accumulate.

Columns are the unit of work: a zero delta component skips its whole column,
and within a touched column only the stored nonzeros are fetched.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cost import charge_delta_overhead
from .errors import ContractError
from .tensor import as_matrix, as_vector


@dataclass(frozen=True)
class SparseWeights:
    rows: int
    cols: int
    indptr: np.ndarray  # int64, length cols + 1
    indices: np.ndarray  # int64 row index per stored entry, ascending per column
    data: np.ndarray  # float64, nonzero

    @property
    def nnz(self):
        return int(self.indptr[-1])

    @property
    def o_m(self):
        return self.nnz / (self.rows * self.cols)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def column(self, j):
        lo, hi = self.indptr[j], self.indptr[j + 1]
        return list(zip(self.indices[lo:hi].tolist(), self.data[lo:hi].tolist()))

    def column_nnz(self):
        return np.diff(self.indptr)

    def to_dense(self):
        W = np.zeros((self.rows, self.cols))
        for j in range(self.cols):
            lo, hi = self.indptr[j], self.indptr[j + 1]
            W[self.indices[lo:hi], j] = self.data[lo:hi]
        return W


def compress(W, zero_tol=0.0):
    """Drop entries with ``|w| <= zero_tol`` and store the rest by column."""
    if zero_tol < 0:
        raise ContractError(f"zero_tol must be >= 0, got {zero_tol}")
    W = as_matrix(W)
    keep = np.abs(W) > zero_tol
    # transpose so row-major nonzero order is column-major in W
    cols_idx, rows_idx = np.nonzero(keep.T)
    indptr = np.zeros(W.shape[1] + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols_idx, minlength=W.shape[1]), out=indptr[1:])
    return SparseWeights(
        rows=W.shape[0],
        cols=W.shape[1],
        indptr=indptr,
        indices=rows_idx.astype(np.int64),
        data=np.ascontiguousarray(W[rows_idx, cols_idx]),
    )


def delta_accumulate(sw, delta, acc, counters=None):
    """Return ``acc + W @ delta`` touching only nonzero delta columns.

    Charges one MAC and one weight fetch per stored entry in every touched
    column.
    """
    delta = as_vector(delta, "delta")
    if delta.shape[0] != sw.cols:
        raise ContractError(f"delta has length {delta.shape[0]}, weights have {sw.cols} columns")
    out = as_vector(acc, "acc").copy()
    if out.shape[0] != sw.rows:
        raise ContractError(f"accumulator has length {out.shape[0]}, weights have {sw.rows} rows")
    macs = kernels.csc_delta_accumulate(sw.indptr, sw.indices, sw.data, delta, out)
    if counters is not None:
        counters.macs += macs
        counters.weight_fetches += macs
    return out


def dense_delta_accumulate(W, delta, acc, counters=None):
    """Dense-storage counterpart of :func:`delta_accumulate`.

    A touched column costs all ``rows`` weights, zero or not.
    """
    W = as_matrix(W)
    delta = as_vector(delta, "delta")
    if delta.shape[0] != W.shape[1]:
        raise ContractError(f"delta has length {delta.shape[0]}, weights have {W.shape[1]} columns")
    out = as_vector(acc, "acc").copy()
    if out.shape[0] != W.shape[0]:
        raise ContractError(f"accumulator has length {out.shape[0]}, weights have {W.shape[0]} rows")
    macs = kernels.dense_delta_accumulate(W, delta, out)
    if counters is not None:
        counters.macs += macs
        counters.weight_fetches += macs
    return out


def delta_matvec_step(W, delta, memory, counters=None):
    """One ``r_t = W delta + r_{t-1}`` product with its linear overheads charged.

    ``W`` may be a dense array or :class:`SparseWeights`.
    """
    if isinstance(W, SparseWeights):
        out = delta_accumulate(W, delta, memory, counters)
        rows, cols = W.shape
    else:
        out = dense_delta_accumulate(W, delta, memory, counters)
        rows, cols = np.shape(W)
    charge_delta_overhead(counters, rows, cols)
    return out


def prune_smallest(W, fraction):
    """Zero the ``fraction`` of entries with the smallest magnitude.

    Ties at the cut are broken by position so exactly
    ``round(fraction * W.size)`` entries are zeroed.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ContractError(f"prune fraction must lie in [0, 1], got {fraction}")
    W = np.array(W, dtype=np.float64)
    k = int(round(fraction * W.size))
    if k:
        order = np.argsort(np.abs(W), axis=None, kind="stable")
        W.flat[order[:k]] = 0.0
    return W
