import numpy as np
import pytest

from deltanet import kernels


def test_backend_switching():
    before = kernels.backend()
    with kernels.use_backend("python"):
        assert kernels.backend() == "python"
    assert kernels.backend() == before
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


@pytest.mark.skipif("cython" not in kernels.available_backends(), reason="extension not built")
def test_backends_bit_identical():
    rng = np.random.default_rng(5)
    for _ in range(50):
        rows, cols = rng.integers(1, 40, 2)
        W = rng.normal(size=(rows, cols)) * (rng.random((rows, cols)) < 0.5)
        x = rng.normal(size=cols) * (rng.random(cols) < 0.3)
        acc = rng.normal(size=rows)
        results = {}
        for name in ("python", "cython"):
            with kernels.use_backend(name):
                out = np.empty(rows)
                kernels.dense_matvec(W, x, out)
                dacc = acc.copy()
                dmacs = kernels.dense_delta_accumulate(W, x, dacc)
                Wt = np.asarray(W.T, order="C")
                indptr = np.concatenate([[0], np.cumsum((Wt != 0).sum(axis=1))]).astype(np.int64)
                indices = np.concatenate([np.flatnonzero(col) for col in Wt]).astype(np.int64)
                data = np.ascontiguousarray(Wt[Wt != 0])
                sacc = acc.copy()
                smacs = kernels.csc_delta_accumulate(indptr, indices, data, x, sacc)
                delta = np.empty(cols)
                ref = np.empty(cols)
                nnz = kernels.threshold_delta(x, acc[:1].repeat(cols), 0.2, delta, ref)
                results[name] = (out, dacc, dmacs, sacc, smacs, delta, ref, nnz)
        for a, b in zip(results["python"], results["cython"]):
            assert np.array_equal(a, b)
