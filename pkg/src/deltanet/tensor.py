"""Float64 vectors/matrices and signed fixed-point (Qm.f) rounding."""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractError


@dataclass(frozen=True)
class QFormat:
    """Signed fixed-point format with ``m`` integer and ``f`` fractional bits."""

    m: int
    f: int

    def __post_init__(self):
        if self.m < 1 or self.f < 0 or self.m + self.f > 31:
            raise ContractError(f"invalid Q format Q{self.m}.{self.f}")

    @classmethod
    def parse(cls, text):
        """Parse ``"3.4"`` or ``"Q3.4"``."""
        match = re.fullmatch(r"[Qq]?(\d+)\.(\d+)", text.strip())
        if match is None:
            raise ValueError(f"cannot parse Q format {text!r}; expected e.g. Q3.4")
        return cls(int(match.group(1)), int(match.group(2)))

    @property
    def step(self):
        return 2.0 ** -self.f

    @property
    def limit(self):
        """Largest representable magnitude (the clip bound is inclusive)."""
        return 2.0 ** (self.m - 1)

    def __str__(self):
        return f"Q{self.m}.{self.f}"


def _round_half_away(x):
    mag = np.abs(x)
    base = np.floor(mag)
    # mag - base is exact, unlike floor(mag + 0.5)
    return np.copysign(np.where(mag - base >= 0.5, base + 1.0, base), x)


def quantize_array(a, q):
    a = np.asarray(a, dtype=np.float64)
    bound = 2.0 ** (q.m + q.f - 1)
    with np.errstate(over="ignore"):  # huge inputs saturate anyway
        scaled = np.clip(a * 2.0 ** q.f, -bound, bound)
    # + 0.0 folds -0.0 into 0.0
    return _round_half_away(scaled) * 2.0 ** -q.f + 0.0


def quantize(theta, q):
    """Round a finite scalar to the Qm.f grid, saturating at +-2**(m-1)."""
    if not math.isfinite(theta):
        raise ContractError(f"cannot quantize non-finite value {theta!r}")
    return float(quantize_array(theta, q))


def quantize_vector(v, q):
    return quantize_array(as_vector(v), q)


def as_vector(v, name="vector"):
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ContractError(f"{name} must be 1-D, got shape {v.shape}")
    return v


def as_matrix(W, name="matrix"):
    W = np.ascontiguousarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
        raise ContractError(f"{name} must be a non-empty 2-D array, got shape {W.shape}")
    return W


def check_finite(a, name):
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{name} contains NaN or Inf")


def matvec_dense(W, x, counters=None):
    """Dense product ``W @ x`` summed in ascending column order.

    Charges ``rows * cols`` MACs and weight fetches to ``counters``.
    """
    W = as_matrix(W)
    x = as_vector(x)
    if W.shape[1] != x.shape[0]:
        raise ContractError(f"matrix has {W.shape[1]} columns but vector has {x.shape[0]} entries")
    out = np.empty(W.shape[0])
    macs = kernels.dense_matvec(W, x, out)
    if counters is not None:
        counters.macs += macs
        counters.weight_fetches += macs
    return out
