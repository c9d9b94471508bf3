"""Reference dense GRU, the correctness oracle for the delta engine."""

from dataclasses import dataclass, fields

import numpy as np

from .cost import charge_dense_overhead
from .errors import ContractError
from .tensor import as_matrix, as_vector, check_finite, matvec_dense, quantize_array

INPUT_MATRICES = ("W_xr", "W_xu", "W_xc")
HIDDEN_MATRICES = ("W_hr", "W_hu", "W_hc")
BIASES = ("b_r", "b_u", "b_c")


def sigmoid(a):
    return np.exp(-np.logaddexp(0.0, -a))


@dataclass
class GruParams:
    W_xr: np.ndarray
    W_xu: np.ndarray
    W_xc: np.ndarray
    W_hr: np.ndarray
    W_hu: np.ndarray
    W_hc: np.ndarray
    b_r: np.ndarray
    b_u: np.ndarray
    b_c: np.ndarray

    def __post_init__(self):
        for name in INPUT_MATRICES + HIDDEN_MATRICES:
            setattr(self, name, as_matrix(getattr(self, name), name))
        for name in BIASES:
            setattr(self, name, as_vector(getattr(self, name), name))
        n_h, n_x = self.W_xr.shape
        for name in INPUT_MATRICES:
            if getattr(self, name).shape != (n_h, n_x):
                raise ContractError(f"{name} has shape {getattr(self, name).shape}, expected {(n_h, n_x)}")
        for name in HIDDEN_MATRICES:
            if getattr(self, name).shape != (n_h, n_h):
                raise ContractError(f"{name} has shape {getattr(self, name).shape}, expected {(n_h, n_h)}")
        for name in BIASES:
            if getattr(self, name).shape != (n_h,):
                raise ContractError(f"{name} has length {getattr(self, name).shape[0]}, expected {n_h}")
        for f in fields(self):
            check_finite(getattr(self, f.name), f.name)

    @property
    def n_x(self):
        return self.W_xr.shape[1]

    @property
    def n_h(self):
        return self.W_xr.shape[0]

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def copy(self):
        return GruParams(**{name: value.copy() for name, value in self.items()})

    @classmethod
    def zeros(cls, n_x, n_h):
        return cls(
            **{name: np.zeros((n_h, n_x)) for name in INPUT_MATRICES},
            **{name: np.zeros((n_h, n_h)) for name in HIDDEN_MATRICES},
            **{name: np.zeros(n_h) for name in BIASES},
        )

    @classmethod
    def random(cls, n_x, n_h, rng, scale=None):
        """Uniform init in ``[-scale, scale]``, default ``1/sqrt(n_h)``."""
        if scale is None:
            scale = 1.0 / np.sqrt(n_h)
        return cls(
            **{name: rng.uniform(-scale, scale, (n_h, n_x)) for name in INPUT_MATRICES},
            **{name: rng.uniform(-scale, scale, (n_h, n_h)) for name in HIDDEN_MATRICES},
            **{name: rng.uniform(-scale, scale, n_h) for name in BIASES},
        )


def _check_step_dims(p, x_t, h_prev):
    if x_t.shape != (p.n_x,):
        raise ContractError(f"input has length {x_t.shape[0]}, expected {p.n_x}")
    if h_prev.shape != (p.n_h,):
        raise ContractError(f"hidden state has length {h_prev.shape[0]}, expected {p.n_h}")


def gru_step(p, x_t, h_prev, counters=None):
    x_t = as_vector(x_t, "x_t")
    h_prev = as_vector(h_prev, "h_prev")
    _check_step_dims(p, x_t, h_prev)

    r = sigmoid(matvec_dense(p.W_xr, x_t, counters) + matvec_dense(p.W_hr, h_prev, counters) + p.b_r)
    u = sigmoid(matvec_dense(p.W_xu, x_t, counters) + matvec_dense(p.W_hu, h_prev, counters) + p.b_u)
    hc = matvec_dense(p.W_hc, h_prev, counters)
    c = np.tanh(matvec_dense(p.W_xc, x_t, counters) + r * hc + p.b_c)
    h_t = (1.0 - u) * h_prev + u * c

    if counters is not None:
        for _ in range(3):
            charge_dense_overhead(counters, p.n_h, p.n_x)
            charge_dense_overhead(counters, p.n_h, p.n_h)
        counters.activation_ops += 3 * p.n_h + 3 * p.n_h
    return h_t


def gru_sequence(p, xs, h0=None, q=None, counters=None):
    """Run :func:`gru_step` over ``xs`` (``T x n_x``); returns ``T x n_h``.

    With a Q format, inputs are quantized on ingestion and every hidden state
    is quantized before it is fed forward.
    """
    xs = np.asarray(xs, dtype=np.float64).reshape(-1, p.n_x)
    h = np.zeros(p.n_h) if h0 is None else as_vector(h0, "h0")
    if q is not None:
        xs = quantize_array(xs, q)
        h = quantize_array(h, q)
    out = np.empty((xs.shape[0], p.n_h))
    for t, x_t in enumerate(xs):
        h = gru_step(p, x_t, h, counters)
        if q is not None:
            h = quantize_array(h, q)
        out[t] = h
    return out
