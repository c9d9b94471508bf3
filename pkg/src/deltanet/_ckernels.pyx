# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the delta engine.

Every routine here has a line-for-line twin in ``_pykernels``; the two must
produce bit-identical results (same summation order, no fused multiply-add).
"""

from libc.math cimport fabs


def dense_matvec(const double[:, :] W, const double[::1] x, double[::1] out):
    cdef Py_ssize_t rows = W.shape[0], cols = W.shape[1]
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(rows):
        s = 0.0
        for j in range(cols):
            s = s + W[i, j] * x[j]
        out[i] = s
    return rows * cols


def dense_delta_accumulate(const double[:, :] W, const double[::1] delta,
                           double[::1] acc):
    cdef Py_ssize_t rows = W.shape[0], cols = W.shape[1]
    cdef Py_ssize_t i, j, touched = 0
    cdef double d
    for j in range(cols):
        d = delta[j]
        if d == 0.0:
            continue
        touched += 1
        for i in range(rows):
            acc[i] = acc[i] + W[i, j] * d
    return touched * rows


def csc_delta_accumulate(const long long[::1] indptr, const long long[::1] indices,
                         const double[::1] data, const double[::1] delta,
                         double[::1] acc):
    cdef Py_ssize_t cols = delta.shape[0]
    cdef Py_ssize_t j, k
    cdef long long macs = 0
    cdef double d
    for j in range(cols):
        d = delta[j]
        if d == 0.0:
            continue
        for k in range(indptr[j], indptr[j + 1]):
            acc[indices[k]] = acc[indices[k]] + data[k] * d
        macs += indptr[j + 1] - indptr[j]
    return macs


def threshold_delta(const double[::1] current, const double[::1] ref, double theta,
                    double[::1] delta_out, double[::1] ref_out):
    cdef Py_ssize_t n = current.shape[0]
    cdef Py_ssize_t i, nnz = 0
    cdef double diff
    for i in range(n):
        diff = current[i] - ref[i]
        if fabs(diff) > theta:
            delta_out[i] = diff
            ref_out[i] = current[i]
            nnz += 1
        else:
            delta_out[i] = 0.0
            ref_out[i] = ref[i]
    return nnz
