"""Sequence-by-sequence evaluation through the instrumented engines."""

from dataclasses import dataclass

import numpy as np

from .cost import CostCounters, gru_theoretical_speedup, total_speedup
from .delta_gru import delta_gru_sequence, mean_occupancy, sparse_weights, weight_occupancy
from .gru import gru_sequence


def _classify(model, hs):
    logits = hs.mean(axis=0) @ model.W_out.T + model.b_out
    return int(np.argmax(logits))


@dataclass
class EvalResult:
    accuracy: float
    counters: CostCounters
    occ_x: float = 1.0
    occ_h: float = 1.0
    o_m: float = 1.0


def evaluate_dense(model, dataset, q=None):
    counters = CostCounters()
    correct = 0
    for xs, label in zip(dataset.sequences, dataset.labels):
        hs = gru_sequence(model.params, xs, q=q, counters=counters)
        correct += int(_classify(model, hs) == label)
    return EvalResult(correct / len(dataset), counters)


def evaluate_delta(model, dataset, theta, q=None, sparse=False, zero_tol=0.0):
    """Run every sequence through the delta engine.

    With ``sparse=True`` the weights are column-compressed first, so only
    nonzero weights in touched columns are charged.
    """
    p = model.params
    weights = sparse_weights(p, zero_tol) if sparse else None
    counters = CostCounters()
    stats = []
    correct = 0
    for xs, label in zip(dataset.sequences, dataset.labels):
        hs, st = delta_gru_sequence(p, xs, theta, q, counters, weights)
        stats.extend(st)
        correct += int(_classify(model, hs) == label)
    occ_x, occ_h = mean_occupancy(stats)
    o_m = weight_occupancy(weights) if sparse else 1.0
    return EvalResult(correct / len(dataset), counters, occ_x, occ_h, o_m)


SWEEP_COLUMNS = (
    "theta",
    "accuracy",
    "mean_occ_x",
    "mean_occ_h",
    "speedup_comp",
    "speedup_mem",
    "speedup_macs",
    "theoretical_speedup",
)
SPARSE_COLUMNS = (
    "o_m",
    "speedup_comp_sparse",
    "speedup_mem_sparse",
    "speedup_macs_sparse",
    "theoretical_speedup_sparse",
)


def sweep(model, dataset, thetas, q=None, sparse=False, zero_tol=0.0):
    """One row per threshold, ascending, compared with a dense run."""
    p = model.params
    dense = evaluate_dense(model, dataset, q)
    rows = []
    for theta in sorted(thetas):
        res = evaluate_delta(model, dataset, theta, q)
        comp, mem = total_speedup(res.counters, dense.counters)
        row = {
            "theta": float(theta),
            "accuracy": res.accuracy,
            "mean_occ_x": res.occ_x,
            "mean_occ_h": res.occ_h,
            "speedup_comp": comp,
            "speedup_mem": mem,
            "speedup_macs": _ratio(dense.counters.macs, res.counters.macs),
            "theoretical_speedup": gru_theoretical_speedup(p.n_x, p.n_h, res.occ_x, res.occ_h),
        }
        if sparse:
            sres = evaluate_delta(model, dataset, theta, q, sparse=True, zero_tol=zero_tol)
            comp, mem = total_speedup(sres.counters, dense.counters)
            row.update(
                o_m=sres.o_m,
                speedup_comp_sparse=comp,
                speedup_mem_sparse=mem,
                speedup_macs_sparse=_ratio(dense.counters.macs, sres.counters.macs),
                theoretical_speedup_sparse=gru_theoretical_speedup(p.n_x, p.n_h, sres.occ_x, sres.occ_h, sres.o_m),
            )
        rows.append(row)
    return dense, rows


def _ratio(a, b):
    return a / b if b else float("inf")
