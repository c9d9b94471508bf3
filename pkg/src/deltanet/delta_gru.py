"""Delta-network GRU execution.

Each of the six weight products is replaced by a running sum fed with
thresholded input/hidden deltas. Deltas are measured against the value that
last crossed the threshold (the reference), so sub-threshold changes cannot
accumulate into drift. The input-side and hidden-side partial sums of each
gate are merged into four memories that start at the gate biases.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractError
from .gru import sigmoid
from .sparse import compress, delta_matvec_step
from .tensor import as_vector, quantize_array

WEIGHT_NAMES = ("W_xr", "W_xu", "W_xc", "W_hr", "W_hu", "W_hc")


@dataclass
class DeltaGruState:
    x_ref: np.ndarray
    h_ref: np.ndarray
    h_prev: np.ndarray
    M_r: np.ndarray
    M_u: np.ndarray
    M_xc: np.ndarray
    M_hc: np.ndarray


@dataclass(frozen=True)
class StepStats:
    nnz_dx: int
    nnz_dh: int
    n_x: int
    n_h: int

    @property
    def occupancy_x(self):
        return self.nnz_dx / self.n_x

    @property
    def occupancy_h(self):
        return self.nnz_dh / self.n_h


def delta_init(p):
    return DeltaGruState(
        x_ref=np.zeros(p.n_x),
        h_ref=np.zeros(p.n_h),
        h_prev=np.zeros(p.n_h),
        M_r=p.b_r.copy(),
        M_u=p.b_u.copy(),
        M_xc=p.b_c.copy(),
        M_hc=np.zeros(p.n_h),
    )


def threshold_delta(current, ref, theta):
    """Componentwise thresholded change against a reference.

    Returns ``(delta, new_ref, nnz)``. A component fires when
    ``|current - ref| > theta``; it then carries the full change and its
    reference moves to ``current``. Otherwise delta is 0 and the reference
    stays put.
    """
    current = as_vector(current, "current")
    ref = as_vector(ref, "ref")
    if current.shape != ref.shape:
        raise ContractError(f"length mismatch: {current.shape[0]} vs {ref.shape[0]}")
    if not theta >= 0:
        raise ContractError(f"threshold must be >= 0, got {theta}")
    delta = np.empty_like(current)
    new_ref = np.empty_like(ref)
    nnz = kernels.threshold_delta(current, ref, float(theta), delta, new_ref)
    return delta, new_ref, nnz


def dense_weights(p):
    return {name: getattr(p, name) for name in WEIGHT_NAMES}


def sparse_weights(p, zero_tol=0.0):
    """Column-compressed copies of the six weight matrices."""
    return {name: compress(getattr(p, name), zero_tol) for name in WEIGHT_NAMES}


def weight_occupancy(weights):
    """Overall fraction of stored weights in a sparse weight set."""
    stored = sum(w.nnz for w in weights.values())
    total = sum(w.rows * w.cols for w in weights.values())
    return stored / total


def delta_gru_step(p, s, x_t, theta, q=None, counters=None, weights=None):
    """Advance one timestep; returns ``(h_t, new_state, stats)``.

    ``weights`` maps the six matrix names to dense arrays or
    :class:`~deltanet.sparse.SparseWeights`; it defaults to the dense
    matrices of ``p``. Only columns selected by nonzero deltas are charged.
    """
    if not theta >= 0:
        raise ContractError(f"threshold must be >= 0, got {theta}")
    x_t = as_vector(x_t, "x_t")
    if x_t.shape[0] != p.n_x:
        raise ContractError(f"input has length {x_t.shape[0]}, expected {p.n_x}")
    if s.h_prev.shape[0] != p.n_h or s.x_ref.shape[0] != p.n_x:
        raise ContractError("state dimensions do not match parameters")
    if weights is None:
        weights = dense_weights(p)
    if q is not None:
        x_t = quantize_array(x_t, q)

    theta = float(theta)
    dx = np.empty(p.n_x)
    x_ref = np.empty(p.n_x)
    nnz_x = kernels.threshold_delta(x_t, s.x_ref, theta, dx, x_ref)
    dh = np.empty(p.n_h)
    h_ref = np.empty(p.n_h)
    # hidden delta is one step behind: h_{t-1} against its reference
    nnz_h = kernels.threshold_delta(s.h_prev, s.h_ref, theta, dh, h_ref)

    M_r = delta_matvec_step(weights["W_hr"], dh, delta_matvec_step(weights["W_xr"], dx, s.M_r, counters), counters)
    M_u = delta_matvec_step(weights["W_hu"], dh, delta_matvec_step(weights["W_xu"], dx, s.M_u, counters), counters)
    M_xc = delta_matvec_step(weights["W_xc"], dx, s.M_xc, counters)
    M_hc = delta_matvec_step(weights["W_hc"], dh, s.M_hc, counters)

    r = sigmoid(M_r)
    u = sigmoid(M_u)
    c = np.tanh(M_xc + r * M_hc)
    h_t = (1.0 - u) * s.h_prev + u * c
    if q is not None:
        h_t = quantize_array(h_t, q)
    if counters is not None:
        counters.activation_ops += 6 * p.n_h

    state = DeltaGruState(x_ref=x_ref, h_ref=h_ref, h_prev=h_t, M_r=M_r, M_u=M_u, M_xc=M_xc, M_hc=M_hc)
    return h_t, state, StepStats(nnz_x, nnz_h, p.n_x, p.n_h)


def delta_gru_sequence(p, xs, theta, q=None, counters=None, weights=None):
    """Run from :func:`delta_init` over ``xs``; returns ``(hs, stats)``."""
    xs = np.asarray(xs, dtype=np.float64).reshape(-1, p.n_x)
    if weights is None:
        weights = dense_weights(p)
    state = delta_init(p)
    hs = np.empty((xs.shape[0], p.n_h))
    stats = []
    for t, x_t in enumerate(xs):
        hs[t], state, st = delta_gru_step(p, state, x_t, theta, q, counters, weights)
        stats.append(st)
    return hs, stats


def mean_occupancy(stats):
    """Mean ``(occupancy_x, occupancy_h)`` over a list of :class:`StepStats`."""
    if not stats:
        return 0.0, 0.0
    return (
        sum(s.nnz_dx for s in stats) / sum(s.n_x for s in stats),
        sum(s.nnz_dh for s in stats) / sum(s.n_h for s in stats),
    )
