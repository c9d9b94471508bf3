import numpy as np
import pytest

from deltanet.cost import CostCounters
from deltanet.errors import ContractError
from deltanet.sparse import compress, delta_accumulate, delta_matvec_step, prune_smallest
from deltanet.tensor import matvec_dense


def exact_mask(rng, shape, occupancy):
    """Boolean mask with exactly round(occupancy * size) True entries."""
    size = int(np.prod(shape))
    mask = np.zeros(size, dtype=bool)
    mask[rng.choice(size, int(round(occupancy * size)), replace=False)] = True
    return mask.reshape(shape)


def test_compress_examples(rng):
    sw = compress(np.zeros((3, 4)))
    assert sw.o_m == 0 and all(sw.column(j) == [] for j in range(4))
    assert compress(np.eye(5)).o_m == 1 / 5
    W = rng.normal(size=(10, 10)) * exact_mask(rng, (10, 10), 0.2)
    assert compress(W).o_m == 0.2


def test_compress_layout_and_roundtrip(rng):
    W = rng.normal(size=(7, 5)) * (rng.random((7, 5)) < 0.4)
    sw = compress(W)
    for j in range(5):
        rows = [r for r, _ in sw.column(j)]
        assert rows == sorted(set(rows))
        assert all(v != 0 for _, v in sw.column(j))
    np.testing.assert_array_equal(sw.to_dense(), W)


def test_compress_zero_tol(rng):
    W = np.array([[0.05, -0.2], [0.1, 0.0]])
    assert np.array_equal(compress(W, 0.1).to_dense(), [[0.0, -0.2], [0.0, 0.0]])
    with pytest.raises(ContractError):
        compress(W, -1)


def test_zero_delta_is_free(rng, backend):
    sw = compress(rng.normal(size=(4, 6)))
    acc = rng.normal(size=4)
    c = CostCounters()
    np.testing.assert_array_equal(delta_accumulate(sw, np.zeros(6), acc, c), acc)
    assert c.macs == 0


def test_multiplicative_sparsity(rng, backend):
    n = 100
    W = rng.normal(size=(n, n)) * exact_mask(rng, (n, n), 0.2)
    delta = rng.normal(size=n) * exact_mask(rng, (n,), 0.2)
    sw = compress(W)
    c = CostCounters()
    delta_accumulate(sw, delta, np.zeros(n), c)
    expected = int(sw.column_nnz()[delta != 0].sum())
    assert c.macs == c.weight_fetches == expected


def test_uniform_columns_give_four_percent(backend):
    n = 100
    W = np.zeros((n, n))
    for j in range(n):
        W[(np.arange(20) * 5 + j) % n, j] = 1.0 + j
    delta = np.zeros(n)
    delta[::5] = 1.0
    c = CostCounters()
    delta_accumulate(compress(W), delta, np.zeros(n), c)
    assert c.macs == 0.04 * n * n == 400


def test_matches_dense_oracle_exactly(rng, backend):
    for _ in range(200):
        rows, cols = rng.integers(1, 30, 2)
        W = rng.normal(size=(rows, cols)) * (rng.random((rows, cols)) < rng.random())
        delta = rng.normal(size=cols) * (rng.random(cols) < rng.random())
        got = delta_accumulate(compress(W), delta, np.zeros(rows))
        assert np.array_equal(got, matvec_dense(W, delta))


def test_nonzero_accumulator(rng):
    W = rng.normal(size=(6, 6)) * (rng.random((6, 6)) < 0.5)
    delta = rng.normal(size=6)
    acc = rng.normal(size=6)
    np.testing.assert_allclose(delta_accumulate(compress(W), delta, acc) - acc, W @ delta, atol=1e-14)


def test_dimension_errors(rng):
    sw = compress(rng.normal(size=(3, 4)))
    with pytest.raises(ContractError):
        delta_accumulate(sw, np.zeros(3), np.zeros(3))
    with pytest.raises(ContractError):
        delta_accumulate(sw, np.zeros(4), np.zeros(4))


def test_step_overhead_charged_once(rng):
    c = CostCounters()
    delta_matvec_step(compress(np.eye(10)), np.zeros(10), np.zeros(10), c)
    assert (c.macs, c.compute, c.memory) == (0, 20, 40)


def test_prune_smallest(rng):
    W = rng.normal(size=(10, 10))
    P = prune_smallest(W, 0.8)
    assert np.count_nonzero(P) == 20
    kept = np.abs(W[P != 0])
    assert kept.min() >= np.abs(W[P == 0]).max()
    assert np.count_nonzero(prune_smallest(W, 0.0)) == 100
