"""Independent reference computations shared by the test modules."""

import numpy as np

from deltanet.train import forward_train


def finite_difference_grads(model, xs, labels, cfg, eps=1e-5):
    """Central differences of the training loss for every model entry."""
    grads = {}
    for name, a in model.arrays():
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            old = a[idx]
            a[idx] = old + eps
            plus, _ = forward_train(model, xs, labels, cfg)
            a[idx] = old - eps
            minus, _ = forward_train(model, xs, labels, cfg)
            a[idx] = old
            g[idx] = (plus - minus) / (2 * eps)
        grads[name] = g
    return grads


def max_relative_error(analytic, numeric, floor=1e-8):
    worst = 0.0
    for name, a in analytic.items():
        b = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
        worst = max(worst, float(np.max(np.abs(a - b) / denom)))
    return worst
