"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``.

Accumulation order matches the compiled code exactly (ascending column,
separate multiply and add), so both backends are bit-identical.
"""

import numpy as np


def dense_matvec(W, x, out):
    out[:] = 0.0
    for j in range(W.shape[1]):
        out += W[:, j] * x[j]
    return W.shape[0] * W.shape[1]


def dense_delta_accumulate(W, delta, acc):
    cols = np.flatnonzero(delta)
    for j in cols:
        acc += W[:, j] * delta[j]
    return len(cols) * W.shape[0]


def csc_delta_accumulate(indptr, indices, data, delta, acc):
    macs = 0
    for j in np.flatnonzero(delta):
        lo, hi = indptr[j], indptr[j + 1]
        rows = indices[lo:hi]
        # row indices are unique within a column, so fancy-index += is safe
        acc[rows] += data[lo:hi] * delta[j]
        macs += hi - lo
    return int(macs)


def threshold_delta(current, ref, theta, delta_out, ref_out):
    diff = current - ref
    fired = np.abs(diff) > theta
    delta_out[:] = np.where(fired, diff, 0.0)
    ref_out[:] = np.where(fired, current, ref)
    return int(np.count_nonzero(fired))
