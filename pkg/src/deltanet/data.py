"""Synthetic temporally redundant sequences and the text file formats.

Both files are line oriented. A header line ``<MAGIC> <version>`` is followed
by ``key value`` lines, then named blocks::

    matrix W_xr 64 16        # name rows cols, then `rows` lines of `cols` values
    vector b_r 64            # name length, then one line of values
    sequence 0 3 100         # index label T, then T lines of n_x values

and a closing ``end`` line. Floats are written with 17 significant digits, so
a save/load round trip is exact.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, ParseError, ValidationError
from .gru import BIASES, HIDDEN_MATRICES, INPUT_MATRICES, GruParams
from .tensor import QFormat

MODEL_MAGIC = "DELTANET-MODEL"
DATA_MAGIC = "DELTANET-DATA"
FORMAT_VERSION = 1


@dataclass
class SequenceDataset:
    sequences: list  # of T x n_x arrays
    labels: np.ndarray
    n_classes: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.sequences) != len(self.labels):
            raise ValidationError("one label per sequence required")
        widths = {np.shape(s)[1] for s in self.sequences}
        if len(widths) > 1:
            raise ValidationError(f"sequences disagree on n_x: {sorted(widths)}")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValidationError(f"labels must lie in [0, {self.n_classes})")

    @property
    def n_x(self):
        return np.shape(self.sequences[0])[1] if self.sequences else int(self.meta.get("n_x", 0))

    def __len__(self):
        return len(self.sequences)

    def stacked(self):
        """``(B x T x n_x array, labels)``; all sequences must share T."""
        lengths = {len(s) for s in self.sequences}
        if len(lengths) != 1:
            raise ContractError("sequences of unequal length cannot be stacked")
        return np.stack(self.sequences), self.labels


def gen_synthetic(n_classes, n_x, T, smoothness, noise, count, seed, task_seed=0, q=None):
    """Generate ``count`` labelled sequences of slowly varying features.

    Each class has a prototype: per feature, a sum of two low-frequency
    sinusoids with class-specific frequency and phase (drawn from
    ``task_seed``, so train and test sets generated with different ``seed``
    share the same classes). A sample is its class prototype plus AR(1)
    noise with one-step autocorrelation ``smoothness`` and stationary
    standard deviation ``noise``.
    """
    if not 0.0 <= smoothness < 1.0:
        raise ContractError(f"smoothness must lie in [0, 1), got {smoothness}")
    if noise < 0:
        raise ContractError(f"noise must be >= 0, got {noise}")
    if n_classes < 1 or n_x < 1 or T < 1 or count < 0:
        raise ContractError("n_classes, n_x and T must be >= 1 and count >= 0")

    task = np.random.default_rng(task_seed)
    t = np.arange(T)[:, None] / T
    prototypes = []
    for _ in range(n_classes):
        freqs = task.uniform(0.25, 1.5, (2, n_x))  # cycles per sequence
        phases = task.uniform(0.0, 2 * np.pi, (2, n_x))
        amps = task.uniform(0.2, 0.6, (2, n_x))
        proto = sum(amps[k] * np.sin(2 * np.pi * freqs[k] * t + phases[k]) for k in range(2))
        prototypes.append(proto)

    rng = np.random.default_rng(seed)
    labels = rng.integers(0, n_classes, count)
    innovation = math.sqrt(1.0 - smoothness**2) * noise
    sequences = []
    for label in labels:
        eps = rng.standard_normal((T, n_x))
        ar = np.empty((T, n_x))
        ar[0] = noise * eps[0]
        for k in range(1, T):
            ar[k] = smoothness * ar[k - 1] + innovation * eps[k]
        seq = prototypes[label] + ar
        if q is not None:
            seq = np.clip(seq, -q.limit, q.limit)
        sequences.append(seq)

    meta = {
        "n_x": n_x,
        "T": T,
        "smoothness": float(smoothness),
        "noise": float(noise),
        "seed": int(seed),
        "task_seed": int(task_seed),
    }
    return SequenceDataset(sequences, labels, n_classes, meta)


# --- text IO ---------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def _row(values):
    return " ".join(_fmt(v) for v in values)


class _Reader:
    def __init__(self, path):
        self.path = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read file: {exc.strerror}", path=self.path) from exc
        self.lines = [(i + 1, line.split()) for i, line in enumerate(text.splitlines()) if line.strip()]
        self.pos = 0

    def error(self, message, lineno=None):
        if lineno is None:
            lineno = self.lines[self.pos - 1][0] if self.pos else 1
        return ParseError(message, lineno, self.path)

    def next(self, what):
        if self.pos >= len(self.lines):
            last = self.lines[-1][0] if self.lines else 0
            raise ParseError(f"unexpected end of file, expected {what}", last + 1, self.path)
        item = self.lines[self.pos]
        self.pos += 1
        return item

    def peek(self):
        return self.lines[self.pos][1] if self.pos < len(self.lines) else None

    def keyvalue(self, key):
        lineno, tokens = self.next(f"'{key}'")
        if len(tokens) < 2 or tokens[0] != key:
            raise ParseError(f"expected '{key} <value>'", lineno, self.path)
        return tokens[1:]

    def integer(self, key):
        (value, *_) = self.keyvalue(key)
        try:
            return int(value)
        except ValueError:
            raise self.error(f"'{key}' must be an integer, got {value!r}") from None

    def real(self, key):
        (value, *_) = self.keyvalue(key)
        try:
            return float(value)
        except ValueError:
            raise self.error(f"'{key}' must be a number, got {value!r}") from None

    def floats(self, count, what):
        lineno, tokens = self.next(what)
        if len(tokens) != count:
            raise ParseError(f"{what}: expected {count} values, got {len(tokens)}", lineno, self.path)
        try:
            return np.array([float(tok) for tok in tokens])
        except ValueError:
            raise ParseError(f"{what}: non-numeric value", lineno, self.path) from None

    def header(self, magic):
        lineno, tokens = self.next("header")
        if len(tokens) != 2 or tokens[0] != magic:
            raise ParseError(f"not a {magic} file", lineno, self.path)
        if tokens[1] != str(FORMAT_VERSION):
            raise ParseError(f"unsupported format version {tokens[1]}", lineno, self.path)

    def block(self):
        lineno, tokens = self.next("a matrix/vector block or 'end'")
        kind = tokens[0]
        if kind == "end":
            return None
        if (kind, len(tokens)) not in (("matrix", 4), ("vector", 3)):
            raise ParseError(f"expected a matrix/vector block, got {' '.join(tokens)!r}", lineno, self.path)
        try:
            dims = [int(tok) for tok in tokens[2:]]
        except ValueError:
            dims = [0]
        if min(dims) < 1:
            raise ParseError(f"bad block header {' '.join(tokens)!r}", lineno, self.path)
        name = tokens[1]
        if kind == "vector":
            return name, self.floats(dims[0], name)
        return name, np.stack([self.floats(dims[1], f"{name} row {i}") for i in range(dims[0])])


@dataclass
class SavedModel:
    params: GruParams
    W_out: np.ndarray | None = None
    b_out: np.ndarray | None = None
    q: QFormat | None = None
    theta: float = 0.0

    @property
    def n_classes(self):
        return 0 if self.W_out is None else self.W_out.shape[0]

    def model(self):
        from .train import Model

        if self.W_out is None:
            raise ValidationError("model file has no readout layer")
        return Model(self.params, self.W_out, self.b_out)


def save_model(path, params, W_out=None, b_out=None, q=None, theta=0.0):
    lines = [
        f"{MODEL_MAGIC} {FORMAT_VERSION}",
        f"n_x {params.n_x}",
        f"n_h {params.n_h}",
        f"n_classes {0 if W_out is None else np.shape(W_out)[0]}",
        "q none" if q is None else f"q {q.m}.{q.f}",
        f"theta {_fmt(theta)}",
    ]
    blocks = list(params.items())
    if W_out is not None:
        blocks += [("W_out", np.asarray(W_out)), ("b_out", np.asarray(b_out))]
    for name, a in blocks:
        if a.ndim == 2:
            lines.append(f"matrix {name} {a.shape[0]} {a.shape[1]}")
            lines.extend(_row(r) for r in a)
        else:
            lines.append(f"vector {name} {a.shape[0]}")
            lines.append(_row(a))
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path):
    rd = _Reader(path)
    rd.header(MODEL_MAGIC)
    n_x = rd.integer("n_x")
    n_h = rd.integer("n_h")
    n_classes = rd.integer("n_classes")
    (qtext, *_) = rd.keyvalue("q")
    try:
        q = None if qtext == "none" else QFormat.parse(qtext)
    except ValueError as exc:
        raise rd.error(str(exc)) from None
    theta = rd.real("theta")
    if n_x < 1 or n_h < 1 or n_classes < 0:
        raise ValidationError(f"{path}: invalid dimensions n_x={n_x} n_h={n_h} n_classes={n_classes}")

    expected = {name: (n_h, n_x) for name in INPUT_MATRICES}
    expected.update({name: (n_h, n_h) for name in HIDDEN_MATRICES})
    expected.update({name: (n_h,) for name in BIASES})
    if n_classes:
        expected.update({"W_out": (n_classes, n_h), "b_out": (n_classes,)})
    arrays = {}
    while (blk := rd.block()) is not None:
        name, values = blk
        if name not in expected:
            raise rd.error(f"unknown block {name!r}")
        if name in arrays:
            raise rd.error(f"duplicate block {name!r}")
        if values.shape != expected[name]:
            raise ValidationError(f"{path}: {name} has shape {values.shape}, expected {expected[name]}")
        arrays[name] = values
    missing = [name for name in expected if name not in arrays]
    if missing:
        raise ValidationError(f"{path}: missing blocks {', '.join(missing)}")
    params = GruParams(**{name: arrays[name] for name in INPUT_MATRICES + HIDDEN_MATRICES + BIASES})
    return SavedModel(params, arrays.get("W_out"), arrays.get("b_out"), q, theta)


def save_dataset(path, ds):
    lines = [
        f"{DATA_MAGIC} {FORMAT_VERSION}",
        f"n_x {ds.n_x}",
        f"n_classes {ds.n_classes}",
        f"count {len(ds)}",
    ]
    for key in ("smoothness", "noise", "seed", "task_seed"):
        if key in ds.meta:
            value = ds.meta[key]
            lines.append(f"{key} {value if isinstance(value, int) else _fmt(value)}")
    for i, (seq, label) in enumerate(zip(ds.sequences, ds.labels)):
        lines.append(f"sequence {i} {int(label)} {len(seq)}")
        lines.extend(_row(r) for r in seq)
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path):
    rd = _Reader(path)
    rd.header(DATA_MAGIC)
    n_x = rd.integer("n_x")
    n_classes = rd.integer("n_classes")
    count = rd.integer("count")
    meta = {"n_x": n_x}
    for key, read in (("smoothness", rd.real), ("noise", rd.real), ("seed", rd.integer), ("task_seed", rd.integer)):
        tokens = rd.peek()
        if tokens and tokens[0] == key:
            meta[key] = read(key)
    sequences, labels = [], []
    for i in range(count):
        lineno, tokens = rd.next(f"sequence {i}")
        if len(tokens) != 4 or tokens[0] != "sequence":
            raise ParseError(f"expected 'sequence {i} <label> <T>'", lineno, rd.path)
        try:
            label, T = int(tokens[2]), int(tokens[3])
        except ValueError:
            raise ParseError("sequence label and length must be integers", lineno, rd.path) from None
        if not 0 <= label < n_classes:
            raise ValidationError(f"{path}: sequence {i} label {label} outside [0, {n_classes})")
        rows = [rd.floats(n_x, f"sequence {i} step {k}") for k in range(T)]
        sequences.append(np.stack(rows) if rows else np.empty((0, n_x)))
        labels.append(label)
    lineno, tokens = rd.next("'end'")
    if tokens != ["end"]:
        raise ParseError("expected 'end'", lineno, rd.path)
    return SequenceDataset(sequences, np.array(labels, dtype=np.int64), n_classes, meta)
