"""Command-line front end: ``deltanet gen|train|eval|sweep``.

Exit status is 0 on success, 1 on runtime failure (including unreadable or
malformed files) and 2 on usage errors.
"""

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .data import gen_synthetic, load_dataset, load_model, save_dataset, save_model
from .errors import ContractError, DivergenceError, ParseError, ValidationError
from .evaluate import SPARSE_COLUMNS, SWEEP_COLUMNS, evaluate_delta, evaluate_dense, sweep
from .cost import total_speedup
from .sparse import prune_smallest
from .tensor import QFormat
from .train import METRIC_COLUMNS, Model, TrainConfig, train_loop

log = logging.getLogger("deltanet")


class UsageError(Exception):
    pass


def _qformat(text):
    if text.lower() == "none":
        return None
    try:
        return QFormat.parse(text)
    except (ValueError, ContractError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _nonneg(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _thetas(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None
    if not values or any(not v >= 0 for v in values):
        raise argparse.ArgumentTypeError("thresholds must be a non-empty list of values >= 0")
    return sorted(values)


def _cell(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def _existing(path, what):
    if not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")
    return path


def cmd_gen(args):
    if not 0.0 <= args.smoothness < 1.0:
        raise UsageError(f"--smoothness must lie in [0, 1), got {args.smoothness}")
    ds = gen_synthetic(
        args.classes, args.nx, args.len, args.smoothness, args.noise, args.count, args.seed,
        task_seed=args.task_seed, q=args.q,
    )
    save_dataset(args.out, ds)
    print(
        f"wrote {args.out}: {len(ds)} sequences, {args.classes} classes, n_x={args.nx}, "
        f"T={args.len}, smoothness={args.smoothness}, noise={args.noise}, seed={args.seed}"
    )


def cmd_train(args):
    ds = load_dataset(_existing(args.data, "dataset"))
    cfg = TrainConfig(
        mode=args.mode,
        theta_train=args.theta,
        q=args.q,
        noise_sigma=args.noise_sigma,
        beta=args.beta,
        learning_rate=args.lr,
        momentum=args.momentum,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        clip_norm=args.clip_norm,
    )
    model0 = Model.init(ds.n_x, args.hidden, ds.n_classes, args.seed)
    with open(args.metrics, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)

        def emit(row):
            writer.writerow([_cell(row[c]) for c in METRIC_COLUMNS])
            fh.flush()
            if args.verbose:
                print(f"epoch {row['epoch']}: loss={row['loss']:.4f} acc={row['accuracy']:.3f}")

        model, metrics = train_loop(model0, ds, cfg, callback=emit)
    p = model.params
    if args.prune:
        for name in ("W_xr", "W_xu", "W_xc", "W_hr", "W_hu", "W_hc"):
            setattr(p, name, prune_smallest(getattr(p, name), args.prune))
    save_model(args.out, p, model.W_out, model.b_out, cfg.q, cfg.eval_theta)
    final = metrics[-1]["accuracy"] if metrics else float("nan")
    print(f"wrote {args.out} and {args.metrics}: mode={cfg.mode} epochs={cfg.epochs} train_accuracy={final:.4f}")


def cmd_eval(args):
    saved = load_model(_existing(args.model, "model"))
    ds = load_dataset(_existing(args.data, "dataset"))
    model = saved.model()
    theta = saved.theta if args.theta is None else args.theta
    dense = evaluate_dense(model, ds, saved.q)
    print(f"dense_accuracy {dense.accuracy!r}")
    if args.dense:
        return
    res = evaluate_delta(model, ds, theta, saved.q, sparse=args.sparse_weights, zero_tol=args.zero_tol)
    comp, mem = total_speedup(res.counters, dense.counters)
    print(f"theta {theta!r}")
    print(f"accuracy {res.accuracy!r}")
    print(f"mean_occ_x {res.occ_x!r}")
    print(f"mean_occ_h {res.occ_h!r}")
    if args.sparse_weights:
        print(f"o_m {res.o_m!r}")
    print(f"speedup_comp {comp!r}")
    print(f"speedup_mem {mem!r}")


def cmd_sweep(args):
    saved = load_model(_existing(args.model, "model"))
    ds = load_dataset(_existing(args.data, "dataset"))
    model = saved.model()
    dense, rows = sweep(model, ds, args.thetas, saved.q, sparse=args.sparse_weights, zero_tol=args.zero_tol)
    columns = SWEEP_COLUMNS + (SPARSE_COLUMNS if args.sparse_weights else ())
    with open(args.out, "w", newline="") as fh:
        fh.write(f"# model: {args.model}\n")
        fh.write(
            f"# eval data: {args.data} seed={ds.meta.get('seed', 'unknown')} "
            f"task_seed={ds.meta.get('task_seed', 'unknown')} count={len(ds)}\n"
        )
        fh.write(f"# q: {saved.q or 'none'}  dense_accuracy: {dense.accuracy!r}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
    print(f"wrote {args.out}: {len(rows)} thresholds, dense_accuracy={dense.accuracy:.4f}")


def build_parser():
    parser = argparse.ArgumentParser(prog="deltanet", description=__doc__.splitlines()[0])
    parser.add_argument("--backend", choices=kernels.available_backends(), help="kernel backend (default: fastest built)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic sequence dataset")
    g.add_argument("--classes", type=int, default=5)
    g.add_argument("--nx", type=int, default=16)
    g.add_argument("--len", type=int, default=100)
    g.add_argument("--count", type=int, default=500)
    g.add_argument("--smoothness", type=float, default=0.995, help="AR(1) coefficient of the noise, in [0, 1)")
    g.add_argument("--noise", type=_nonneg, default=0.8, help="stationary noise standard deviation")
    g.add_argument("--seed", type=int, default=0, help="sample seed; use distinct seeds for train and test")
    g.add_argument("--task-seed", type=int, default=0, help="seed of the class prototypes")
    g.add_argument("--q", type=_qformat, default=None, help="clip features to this Q format's range")
    g.add_argument("--out", default="dataset.txt")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a GRU classifier")
    t.add_argument("--data", required=True)
    t.add_argument("--out", default="model.txt")
    t.add_argument("--metrics", default="metrics.csv")
    t.add_argument("--mode", choices=("dense", "delta"), default="dense")
    t.add_argument("--theta", type=_nonneg, default=0.0, help="training threshold (delta mode)")
    t.add_argument("--q", type=_qformat, default=None, help="activation format, e.g. Q3.4")
    t.add_argument("--noise-sigma", type=_nonneg, default=0.0)
    t.add_argument("--beta", type=_nonneg, default=0.0, help="weight of the L1 hidden-delta cost")
    t.add_argument("--hidden", type=int, default=64)
    t.add_argument("--lr", type=_nonneg, default=0.05)
    t.add_argument("--momentum", type=_nonneg, default=0.9)
    t.add_argument("--epochs", type=int, default=30)
    t.add_argument("--batch-size", type=int, default=25)
    t.add_argument("--clip-norm", type=_nonneg, default=None)
    t.add_argument("--prune", type=_nonneg, default=0.0, help="fraction of smallest GRU weights zeroed after training")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a model densely and as a delta network")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--theta", type=_nonneg, default=None, help="default: the model file's threshold")
    e.add_argument("--dense", action="store_true", help="dense evaluation only")
    e.add_argument("--sparse-weights", action="store_true", help="charge only nonzero weights")
    e.add_argument("--zero-tol", type=_nonneg, default=0.0)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="accuracy/speedup report over thresholds")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--thetas", type=_thetas, default=_thetas("0,0.05,0.1,0.15,0.2,0.3,0.5"))
    s.add_argument("--out", default="sweep.csv")
    s.add_argument("--sparse-weights", action="store_true", help="also report speedups with weight sparsity")
    s.add_argument("--zero-tol", type=_nonneg, default=0.0)
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.backend:
        kernels.set_backend(args.backend)
    if args.command in ("gen", "train") and getattr(args, "count", 1) < 0:
        parser.error("--count must be >= 0")
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ParseError, ValidationError, ContractError, DivergenceError, OSError) as exc:
        print(f"deltanet: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
