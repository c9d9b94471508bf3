"""Operation and memory-traffic accounting.

Each matrix-vector product is costed as the primitive ``r = W x`` (dense) or
``r_t = W delta + r_{t-1}`` (delta). The quadratic terms (MACs, weight
fetches) are charged by the kernels; the linear per-product overheads are
charged by the step wrappers through :func:`charge_dense_overhead` and
:func:`charge_delta_overhead`.
"""

import math
from dataclasses import asdict, dataclass, fields

from .errors import ContractError


@dataclass
class CostCounters:
    macs: int = 0
    weight_fetches: int = 0
    state_reads: int = 0
    state_writes: int = 0
    # delta subtraction and memory addition (the linear compute overhead)
    elementwise_ops: int = 0
    # sigmoid/tanh evaluations and gate blends; not part of the cost model
    activation_ops: int = 0

    def __add__(self, other):
        if not isinstance(other, CostCounters):
            return NotImplemented
        return CostCounters(
            **{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)}
        )

    def merge(self, other):
        """Add ``other`` into this counter in place and return self."""
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    @property
    def compute(self):
        return self.macs + self.elementwise_ops

    @property
    def memory(self):
        return self.weight_fetches + self.state_reads + self.state_writes

    def as_dict(self):
        return asdict(self)


def charge_dense_overhead(counters, rows, cols):
    # read the input vector, write the result
    if counters is not None:
        counters.state_reads += cols
        counters.state_writes += rows


def charge_delta_overhead(counters, rows, cols):
    # read x_t and its reference (2 cols), read and write the stored result
    if counters is not None:
        counters.state_reads += 2 * cols + rows
        counters.state_writes += rows
        counters.elementwise_ops += cols + rows


CSV_HEADER = (
    "n",
    "o_c",
    "o_m",
    "comp_dense",
    "comp_sparse",
    "mem_dense",
    "mem_sparse",
    "speedup_comp",
    "speedup_mem",
)


@dataclass(frozen=True)
class CostReport:
    n: int
    o_c: float
    o_m: float
    comp_dense: float
    comp_sparse: float
    mem_dense: float
    mem_sparse: float

    @property
    def speedup_comp(self):
        return self.comp_dense / self.comp_sparse

    @property
    def speedup_mem(self):
        return self.mem_dense / self.mem_sparse

    def csv_row(self):
        return ",".join(_fmt(getattr(self, name)) for name in CSV_HEADER)

    @staticmethod
    def csv_header():
        return ",".join(CSV_HEADER)


def _fmt(value):
    if isinstance(value, int) or float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def theoretical_costs(n, o_c, o_m=1.0):
    """Closed-form dense vs delta cost of one ``n x n`` matrix-vector product.

    ``o_c`` is the occupancy of the delta vector and ``o_m`` that of the weight
    matrix. Dense compute is ``n**2`` and dense memory ``n**2 + n``; the delta
    product costs ``o_m*o_c*n**2 + 2n`` compute and ``o_m*o_c*n**2 + 4n`` memory.
    """
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    for name, value in (("o_c", o_c), ("o_m", o_m)):
        if not 0.0 <= value <= 1.0:
            raise ContractError(f"{name} must lie in [0, 1], got {value}")
    quad = o_m * o_c * n * n
    return CostReport(
        n=n,
        o_c=o_c,
        o_m=o_m,
        comp_dense=n * n,
        comp_sparse=quad + 2 * n,
        mem_dense=n * n + n,
        mem_sparse=quad + 4 * n,
    )


def measured_speedup(delta_counters, dense_counters):
    """Return ``(mac_speedup, fetch_speedup)`` of a delta run over a dense run."""
    if dense_counters.macs == 0 or dense_counters.weight_fetches == 0:
        raise ContractError("dense counters are empty")
    if delta_counters.macs == 0 or delta_counters.weight_fetches == 0:
        raise ContractError("delta run charged no MACs; speedup is unbounded")
    return (
        dense_counters.macs / delta_counters.macs,
        dense_counters.weight_fetches / delta_counters.weight_fetches,
    )


def dense_gru_counters(n_x, n_h, steps):
    """Counters a dense GRU run of ``steps`` timesteps charges."""
    c = CostCounters()
    quad = 3 * n_h * (n_x + n_h) * steps
    c.macs = c.weight_fetches = quad
    c.state_reads = 3 * (n_x + n_h) * steps
    c.state_writes = 6 * n_h * steps
    c.activation_ops = 6 * n_h * steps
    return c


def delta_gru_counters(n_x, n_h, nnz_x, nnz_h, steps):
    """Counters a delta GRU run with dense weights charges.

    ``nnz_x`` and ``nnz_h`` are the total numbers of fired input and hidden
    delta components over all ``steps``.
    """
    c = CostCounters()
    quad = 3 * n_h * (nnz_x + nnz_h)
    c.macs = c.weight_fetches = quad
    c.state_reads = 3 * (2 * n_x + n_h + 2 * n_h + n_h) * steps
    c.state_writes = 6 * n_h * steps
    c.elementwise_ops = 3 * (n_x + n_h + n_h + n_h) * steps
    c.activation_ops = 6 * n_h * steps
    return c


def total_speedup(delta_counters, dense_counters):
    """``(compute_ratio, memory_ratio)`` including the linear overheads."""
    if dense_counters.compute == 0 or dense_counters.memory == 0:
        raise ContractError("dense counters are empty")
    return (
        dense_counters.compute / delta_counters.compute,
        dense_counters.memory / delta_counters.memory,
    )


def gru_theoretical_speedup(n_x, n_h, occ_x, occ_h, o_m=1.0):
    """Quadratic-term speedup ``1/(o_m * o_c)`` for a GRU layer.

    ``o_c`` is the column-weighted delta occupancy over the input-side and
    hidden-side matrices.
    """
    o_c = (n_x * occ_x + n_h * occ_h) / (n_x + n_h)
    if o_c * o_m == 0:
        return math.inf
    return 1.0 / (o_m * o_c)
