"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times column-skipping delta accumulation at several delta occupancies and a
full delta GRU sequence, and checks that both backends agree bit for bit.
"""

import argparse
import time

import numpy as np

from deltanet import kernels
from deltanet.delta_gru import delta_gru_sequence
from deltanet.gru import GruParams
from deltanet.sparse import compress, delta_accumulate


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--n", type=int, default=512, help="matrix size for the accumulate benchmark")
    parser.add_argument("--hidden", type=int, default=128)
    parser.add_argument("--steps", type=int, default=1000)
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    rng = np.random.default_rng(0)
    sw = compress(rng.normal(size=(args.n, args.n)) * (rng.random((args.n, args.n)) < 0.5))

    print(f"\ndelta_accumulate, {args.n}x{args.n} weights at o_m={sw.o_m:.2f}, 100 calls")
    print(f"{'o_c':>6}" + "".join(f"{b:>12}" for b in backends))
    for occ in (0.05, 0.2, 0.5, 1.0):
        deltas = rng.normal(size=(100, args.n)) * (rng.random((100, args.n)) < occ)
        outs, cells = [], []
        for name in backends:
            with kernels.use_backend(name):
                t, out = best_of(args.repeat, lambda: [delta_accumulate(sw, d, np.zeros(args.n)) for d in deltas])
            cells.append(f"{t * 1e3:10.2f}ms")
            outs.append(np.array(out))
        assert all(np.array_equal(outs[0], o) for o in outs[1:]), "backends disagree"
        print(f"{occ:>6}" + "".join(f"{c:>12}" for c in cells))

    p = GruParams.random(16, args.hidden, rng)
    xs = np.cumsum(rng.normal(scale=0.05, size=(args.steps, 16)), axis=0)
    print(f"\ndelta GRU sequence, n_h={args.hidden}, {args.steps} steps, theta=0.1")
    outs = []
    for name in backends:
        with kernels.use_backend(name):
            t, (hs, _) = best_of(max(1, args.repeat // 2), lambda: delta_gru_sequence(p, xs, 0.1))
        outs.append(hs)
        print(f"{name:>10}: {t:.3f} s")
    assert all(np.array_equal(outs[0], o) for o in outs[1:]), "backends disagree"
    print("\nall backends produced identical outputs")


if __name__ == "__main__":
    main()
