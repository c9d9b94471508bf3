import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltanet.cost import CostCounters
from deltanet.errors import ContractError
from deltanet.tensor import QFormat, matvec_dense, quantize, quantize_vector

Q34 = QFormat(3, 4)
finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
qformats = st.builds(QFormat, st.integers(1, 8), st.integers(0, 12))


@pytest.mark.parametrize(
    "theta, expected",
    [
        (0.0, 0.0),
        (0.1, 0.125),  # round(1.6) = 2 -> 2/16
        (100.0, 4.0),  # 1600 clipped to 64 -> 64/16
        (-100.0, -4.0),
        (0.03125, 0.0625),  # 0.5 rounds away from zero
        (-0.03125, -0.0625),
        (0.09375, 0.125),  # 1.5 -> 2
    ],
)
def test_quantize_examples(theta, expected):
    assert quantize(theta, Q34) == expected


def test_quantize_rejects_non_finite():
    with pytest.raises(ContractError):
        quantize(math.inf, Q34)


def test_qformat_validation_and_parse():
    assert QFormat.parse("Q3.4") == Q34
    assert QFormat.parse("2.5") == QFormat(2, 5)
    with pytest.raises(ContractError):
        QFormat(0, 4)
    with pytest.raises(ContractError):
        QFormat(20, 12)
    with pytest.raises(ValueError):
        QFormat.parse("3")


def test_quantize_vector_examples():
    assert quantize_vector([0, 0, 0], Q34).tolist() == [0, 0, 0]
    assert quantize_vector([0.1, -0.1], Q34).tolist() == [0.125, -0.125]
    grid = np.arange(-64, 65) / 16
    assert np.array_equal(quantize_vector(grid, Q34), grid)


@given(finite, qformats)
def test_quantize_idempotent(theta, q):
    once = quantize(theta, q)
    assert quantize(once, q) == once


@given(finite, qformats)
def test_quantize_half_step_error_inside_range(theta, q):
    bound = 2.0 ** (q.m - 1)
    if abs(theta) < bound:
        assert abs(quantize(theta, q) - theta) <= 2.0 ** (-q.f - 1)
    else:
        assert abs(quantize(theta, q)) == bound


def _scalar_matvec(W, x):
    out = []
    for row in W.tolist():
        s = 0.0
        for w, v in zip(row, x.tolist()):
            s += w * v
        out.append(s)
    return out


def test_matvec_dense_examples(backend, rng):
    c = CostCounters()
    assert matvec_dense(np.eye(3), [1.0, 2.0, 3.0], c).tolist() == [1.0, 2.0, 3.0]
    assert c.macs == 9 and c.weight_fetches == 9

    c = CostCounters()
    assert not matvec_dense(np.zeros((5, 5)), rng.normal(size=5), c).any()
    assert c.macs == 25

    W = rng.normal(size=(4, 4))
    x = rng.normal(size=4)
    assert matvec_dense(W, x).tolist() == _scalar_matvec(W, x)


def test_matvec_dense_counts_shape_not_values(rng):
    c = CostCounters()
    matvec_dense(rng.normal(size=(3, 7)), np.zeros(7), c)
    assert (c.macs, c.weight_fetches) == (21, 21)


def test_matvec_dense_dimension_mismatch():
    with pytest.raises(ContractError):
        matvec_dense(np.eye(3), [1.0, 2.0])
