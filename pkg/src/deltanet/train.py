"""Toy-scale training of GRU classifiers for delta execution.

Backpropagation through time is written out by hand for two forward models:

* ``dense``: the ordinary GRU, optionally with Gaussian noise added to the
  inputs and hidden states that enter the weight products.
* ``delta``: the thresholded delta GRU itself, so the network learns under
  the truncation errors it will see at inference.

Rounding to a Q format and the threshold masks are passed straight through
in the backward pass (fired components carry gradient, suppressed ones do
not). An optional L1 penalty on the hidden deltas trades accuracy for
sparsity.
"""

import logging
import math
from dataclasses import dataclass, fields

import numpy as np

from .cost import dense_gru_counters, delta_gru_counters, total_speedup
from .errors import ContractError, DivergenceError
from .gru import GruParams, sigmoid
from .tensor import QFormat, quantize_array

log = logging.getLogger(__name__)

MODES = ("dense", "delta")


@dataclass
class Model:
    """A GRU layer followed by a softmax readout of the time-averaged state."""

    params: GruParams
    W_out: np.ndarray  # n_classes x n_h
    b_out: np.ndarray

    def __post_init__(self):
        self.W_out = np.asarray(self.W_out, dtype=np.float64)
        self.b_out = np.asarray(self.b_out, dtype=np.float64)
        if self.W_out.ndim != 2 or self.W_out.shape[1] != self.params.n_h:
            raise ContractError(f"W_out has shape {self.W_out.shape}, expected (n_classes, {self.params.n_h})")
        if self.b_out.shape != (self.W_out.shape[0],):
            raise ContractError(f"b_out has shape {self.b_out.shape}, expected ({self.W_out.shape[0]},)")

    @property
    def n_classes(self):
        return self.W_out.shape[0]

    def arrays(self):
        return self.params.items() + [("W_out", self.W_out), ("b_out", self.b_out)]

    def copy(self):
        return Model(self.params.copy(), self.W_out.copy(), self.b_out.copy())

    @classmethod
    def init(cls, n_x, n_h, n_classes, seed):
        rng = np.random.default_rng(seed)
        params = GruParams.random(n_x, n_h, rng)
        scale = 1.0 / math.sqrt(n_h)
        return cls(params, rng.uniform(-scale, scale, (n_classes, n_h)), np.zeros(n_classes))


@dataclass
class Gradients:
    W_xr: np.ndarray
    W_xu: np.ndarray
    W_xc: np.ndarray
    W_hr: np.ndarray
    W_hu: np.ndarray
    W_hc: np.ndarray
    b_r: np.ndarray
    b_u: np.ndarray
    b_c: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def norm(self):
        return math.sqrt(sum(float(np.sum(g * g)) for _, g in self.items()))


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "dense"
    theta_train: float = 0.0
    q: QFormat | None = None
    noise_sigma: float = 0.0
    beta: float = 0.0
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 50
    batch_size: int = 25
    seed: int = 0
    clip_norm: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ContractError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("theta_train", "noise_sigma", "beta", "learning_rate", "momentum"):
            if not getattr(self, name) >= 0:
                raise ContractError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ContractError("epochs must be >= 0 and batch_size >= 1")

    @property
    def eval_theta(self):
        return self.theta_train if self.mode == "delta" else 0.0


@dataclass
class ForwardCache:
    mode: str
    model: Model
    labels: np.ndarray
    hs: np.ndarray  # (T + 1) x B x n_h, hs[0] = h_0
    probs: np.ndarray
    hbar: np.ndarray
    beta: float
    steps: list
    loss: float
    task_loss: float
    sparsity_loss: float
    nnz_x: int
    nnz_h: int


def _sparsity_scale(beta, B, T, n_h):
    return beta / (B * T * n_h)


def _prepare(model, xs, labels, q):
    xs = np.asarray(xs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if xs.ndim != 3 or xs.shape[0] == 0:
        raise ContractError("batch must be a non-empty B x T x n_x array")
    if xs.shape[1] == 0:
        raise ContractError("sequences must have at least one timestep")
    if xs.shape[2] != model.params.n_x:
        raise ContractError(f"inputs have {xs.shape[2]} features, model expects {model.params.n_x}")
    if labels.shape != (xs.shape[0],):
        raise ContractError("need one label per sequence")
    if q is not None:
        xs = quantize_array(xs, q)
    return xs, labels


def _run_dense(p, xs, q, eta_x=None, eta_h=None):
    B, T, _ = xs.shape
    h = np.zeros((B, p.n_h))
    hs = np.empty((T + 1, B, p.n_h))
    hs[0] = h
    steps = []
    for t in range(T):
        xn = xs[:, t] if eta_x is None else xs[:, t] + eta_x[t]
        hn = h if eta_h is None else h + eta_h[t]
        r = sigmoid(xn @ p.W_xr.T + hn @ p.W_hr.T + p.b_r)
        u = sigmoid(xn @ p.W_xu.T + hn @ p.W_hu.T + p.b_u)
        hc = hn @ p.W_hc.T
        c = np.tanh(xn @ p.W_xc.T + r * hc + p.b_c)
        h = (1.0 - u) * h + u * c
        if q is not None:
            h = quantize_array(h, q)
        hs[t + 1] = h
        steps.append((xn, hn, r, u, hc, c))
    return hs, steps


def _run_delta(p, xs, theta, q):
    B, T, _ = xs.shape
    x_ref = np.zeros((B, p.n_x))
    h_ref = np.zeros((B, p.n_h))
    h = np.zeros((B, p.n_h))
    M_r = np.broadcast_to(p.b_r, (B, p.n_h)).copy()
    M_u = np.broadcast_to(p.b_u, (B, p.n_h)).copy()
    M_xc = np.broadcast_to(p.b_c, (B, p.n_h)).copy()
    M_hc = np.zeros((B, p.n_h))
    hs = np.empty((T + 1, B, p.n_h))
    hs[0] = h
    steps = []
    nnz_x = nnz_h = 0
    for t in range(T):
        x_t = xs[:, t]
        diff = x_t - x_ref
        fired_x = np.abs(diff) > theta
        dx = np.where(fired_x, diff, 0.0)
        x_ref = np.where(fired_x, x_t, x_ref)
        diff = h - h_ref
        fired_h = np.abs(diff) > theta
        dh = np.where(fired_h, diff, 0.0)
        h_ref = np.where(fired_h, h, h_ref)
        nnz_x += int(np.count_nonzero(fired_x))
        nnz_h += int(np.count_nonzero(fired_h))

        M_r = M_r + dx @ p.W_xr.T + dh @ p.W_hr.T
        M_u = M_u + dx @ p.W_xu.T + dh @ p.W_hu.T
        M_xc = M_xc + dx @ p.W_xc.T
        M_hc = M_hc + dh @ p.W_hc.T
        r = sigmoid(M_r)
        u = sigmoid(M_u)
        c = np.tanh(M_xc + r * M_hc)
        h = (1.0 - u) * h + u * c
        if q is not None:
            h = quantize_array(h, q)
        hs[t + 1] = h
        steps.append((dx, dh, fired_h, M_hc, r, u, c))
    return hs, steps, nnz_x, nnz_h


def _hidden_deltas(hs):
    """Exact hidden deltas h_{t-1} - h_{t-2} for t = 1..T (with h_{-1} = h_0)."""
    prev = np.concatenate([hs[:1], hs[:-2]], axis=0)
    return hs[:-1] - prev


def _readout(model, hs, labels):
    hbar = hs[1:].mean(axis=0)
    logits = hbar @ model.W_out.T + model.b_out
    logits = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    task_loss = -float(np.mean(np.log(probs[np.arange(len(labels)), labels])))
    return hbar, probs, task_loss


def forward_train(model, xs, labels, cfg, rng=None):
    """Forward pass for training; returns ``(loss, cache)``.

    ``xs`` is ``B x T x n_x``. ``rng`` supplies the Gaussian noise when
    ``cfg.noise_sigma > 0`` in dense mode.
    """
    xs, labels = _prepare(model, xs, labels, cfg.q)
    p = model.params
    B, T, _ = xs.shape
    if cfg.mode == "dense":
        eta_x = eta_h = None
        if cfg.noise_sigma > 0:
            if rng is None:
                raise ContractError("noise injection needs an rng")
            eta_x = rng.normal(0.0, cfg.noise_sigma, (T, B, p.n_x))
            eta_h = rng.normal(0.0, cfg.noise_sigma, (T, B, p.n_h))
        hs, steps = _run_dense(p, xs, cfg.q, eta_x, eta_h)
        dh_all = _hidden_deltas(hs)
        nnz_x = nnz_h = 0
    else:
        hs, steps, nnz_x, nnz_h = _run_delta(p, xs, cfg.theta_train, cfg.q)
        dh_all = np.stack([s[1] for s in steps])

    hbar, probs, task_loss = _readout(model, hs, labels)
    sparsity_loss = cfg.beta * float(np.mean(np.abs(dh_all))) if cfg.beta else 0.0
    loss = task_loss + sparsity_loss
    cache = ForwardCache(
        mode=cfg.mode,
        model=model,
        labels=labels,
        hs=hs,
        probs=probs,
        hbar=hbar,
        beta=cfg.beta,
        steps=steps,
        loss=loss,
        task_loss=task_loss,
        sparsity_loss=sparsity_loss,
        nnz_x=nnz_x,
        nnz_h=nnz_h,
    )
    return loss, cache


def backward(cache):
    """Gradients of the cached loss with respect to every model array."""
    model = cache.model
    p = model.params
    hs = cache.hs
    T = hs.shape[0] - 1
    B = hs.shape[1]

    dlogits = cache.probs.copy()
    dlogits[np.arange(B), cache.labels] -= 1.0
    dlogits /= B
    g = {name: np.zeros_like(a) for name, a in model.arrays()}
    g["W_out"] = dlogits.T @ cache.hbar
    g["b_out"] = dlogits.sum(axis=0)
    dh_readout = (dlogits @ model.W_out) / T
    l1 = _sparsity_scale(cache.beta, B, T, p.n_h)

    if cache.mode == "dense":
        _backward_dense(p, cache, dh_readout, l1, g)
    else:
        _backward_delta(p, cache, dh_readout, l1, g)
    return Gradients(**g)


def _backward_dense(p, cache, dh_readout, l1, g):
    hs = cache.hs
    T = len(cache.steps)
    # L1 term on h_{k} - h_{k-1}, k = 1..T-1, pushed onto the hidden states
    extra = np.zeros_like(hs)
    if l1:
        sgn = l1 * np.sign(hs[1:T] - hs[0 : T - 1])
        extra[1:T] += sgn
        extra[0 : T - 1] -= sgn
    carry = np.zeros_like(dh_readout)
    for t in range(T - 1, -1, -1):
        xn, hn, r, u, hc, c = cache.steps[t]
        h_prev = hs[t]
        gh = carry + dh_readout + extra[t + 1]
        gu = gh * (c - h_prev)
        gc = gh * u
        gh_prev = gh * (1.0 - u)

        gac = gc * (1.0 - c * c)
        g["W_xc"] += gac.T @ xn
        g["b_c"] += gac.sum(axis=0)
        ghc = gac * r
        g["W_hc"] += ghc.T @ hn
        ghn = ghc @ p.W_hc

        gar = gac * hc * r * (1.0 - r)
        g["W_xr"] += gar.T @ xn
        g["W_hr"] += gar.T @ hn
        g["b_r"] += gar.sum(axis=0)
        ghn += gar @ p.W_hr

        gau = gu * u * (1.0 - u)
        g["W_xu"] += gau.T @ xn
        g["W_hu"] += gau.T @ hn
        g["b_u"] += gau.sum(axis=0)
        ghn += gau @ p.W_hu

        carry = gh_prev + ghn


def _backward_delta(p, cache, dh_readout, l1, g):
    hs = cache.hs
    T = len(cache.steps)
    gM_r = np.zeros_like(dh_readout)
    gM_u = np.zeros_like(dh_readout)
    gM_xc = np.zeros_like(dh_readout)
    gM_hc = np.zeros_like(dh_readout)
    g_href = np.zeros_like(dh_readout)
    carry = np.zeros_like(dh_readout)
    for t in range(T - 1, -1, -1):
        dx, dh, fired_h, M_hc, r, u, c = cache.steps[t]
        h_prev = hs[t]
        gh = carry + dh_readout
        gu = gh * (c - h_prev)
        gc = gh * u
        gh_prev = gh * (1.0 - u)

        gac = gc * (1.0 - c * c)
        gM_xc += gac
        gM_hc += gac * r
        gM_r += gac * M_hc * r * (1.0 - r)
        gM_u += gu * u * (1.0 - u)

        g["W_xr"] += gM_r.T @ dx
        g["W_hr"] += gM_r.T @ dh
        g["W_xu"] += gM_u.T @ dx
        g["W_hu"] += gM_u.T @ dh
        g["W_xc"] += gM_xc.T @ dx
        g["W_hc"] += gM_hc.T @ dh

        # dh = mask * (h_{t-1} - h_ref); the new reference is h_ref + dh
        g_dh = gM_r @ p.W_hr + gM_u @ p.W_hu + gM_hc @ p.W_hc + g_href
        if l1:
            g_dh += l1 * np.sign(dh)
        g_dh = np.where(fired_h, g_dh, 0.0)
        gh_prev += g_dh
        g_href = g_href - g_dh
        carry = gh_prev
    # memories start at the biases
    g["b_r"] += gM_r.sum(axis=0)
    g["b_u"] += gM_u.sum(axis=0)
    g["b_c"] += gM_xc.sum(axis=0)


def predict_batch(model, xs, mode="dense", theta=0.0, q=None):
    """Batched clean forward; returns ``(predictions, nnz_x, nnz_h)``.

    Dense mode reports the occupancy of exact (zero-threshold) deltas.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if q is not None:
        xs = quantize_array(xs, q)
    p = model.params
    if mode == "dense":
        hs, _ = _run_dense(p, xs, q)
        nnz_x = int(np.count_nonzero(np.diff(np.concatenate([np.zeros_like(xs[:, :1]), xs], axis=1), axis=1)))
        nnz_h = int(np.count_nonzero(_hidden_deltas(hs)))
    else:
        hs, _, nnz_x, nnz_h = _run_delta(p, xs, theta, q)
    logits = hs[1:].mean(axis=0) @ model.W_out.T + model.b_out
    return np.argmax(logits, axis=1), nnz_x, nnz_h


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def train_loop(model0, dataset, cfg, callback=None):
    """SGD with momentum on the combined task + sparsity loss.

    Returns ``(model, metrics)`` where ``metrics`` holds one dict per epoch
    with the columns of :data:`METRIC_COLUMNS`. The run is deterministic for
    a given ``cfg.seed``.
    """
    xs, labels = dataset.stacked()
    model = model0.copy()
    metrics = []
    if cfg.epochs == 0:
        return model, metrics
    rng = np.random.default_rng(cfg.seed)
    velocity = {name: np.zeros_like(a) for name, a in model.arrays()}
    n_x, n_h = model.params.n_x, model.params.n_h

    for epoch in range(1, cfg.epochs + 1):
        totals = np.zeros(3)
        seen = 0
        for idx in _batches(len(labels), cfg.batch_size, rng):
            loss, cache = forward_train(model, xs[idx], labels[idx], cfg, rng)
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite loss {loss} at epoch {epoch}; lower the learning rate")
            grads = backward(cache)
            scale = 1.0
            if cfg.clip_norm is not None:
                norm = grads.norm()
                if norm > cfg.clip_norm:
                    scale = cfg.clip_norm / norm
            arrays = dict(model.arrays())
            for name, grad in grads.items():
                v = velocity[name]
                v *= cfg.momentum
                v -= cfg.learning_rate * scale * grad
                arrays[name] += v
            totals += len(idx) * np.array([cache.loss, cache.task_loss, cache.sparsity_loss])
            seen += len(idx)

        preds, nnz_x, nnz_h = predict_batch(model, xs, cfg.mode, cfg.eval_theta, cfg.q)
        T = xs.shape[1]
        steps = xs.shape[0] * T
        comp, mem = total_speedup(
            delta_gru_counters(n_x, n_h, nnz_x, nnz_h, steps), dense_gru_counters(n_x, n_h, steps)
        )
        row = {
            "epoch": epoch,
            "loss": float(totals[0] / seen),
            "task_loss": float(totals[1] / seen),
            "sparsity_loss": float(totals[2] / seen),
            "accuracy": float(np.mean(preds == labels)),
            "mean_occ_x": nnz_x / (steps * n_x),
            "mean_occ_h": nnz_h / (steps * n_h),
            "speedup_comp": comp,
            "speedup_mem": mem,
        }
        metrics.append(row)
        log.info("epoch %d loss %.4f acc %.3f occ_h %.3f", epoch, row["loss"], row["accuracy"], row["mean_occ_h"])
        if callback is not None:
            callback(row)
    return model, metrics


METRIC_COLUMNS = (
    "epoch",
    "loss",
    "task_loss",
    "sparsity_loss",
    "accuracy",
    "mean_occ_x",
    "mean_occ_h",
    "speedup_comp",
    "speedup_mem",
)
