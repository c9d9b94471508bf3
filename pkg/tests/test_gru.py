import math

import numpy as np
import pytest

from deltanet.cost import CostCounters, dense_gru_counters
from deltanet.errors import ContractError
from deltanet.gru import GruParams, gru_sequence, gru_step
from deltanet.tensor import QFormat


def scalar_gru_step(p, x, h):
    """Plain-loop transcription of the four GRU equations."""
    n_h, n_x = p.W_xr.shape

    def dot(W, v, i):
        return sum(W[i][j] * v[j] for j in range(len(v)))

    W = {name: getattr(p, name).tolist() for name in ("W_xr", "W_xu", "W_xc", "W_hr", "W_hu", "W_hc")}
    x, h = list(x), list(h)
    out = []
    for i in range(n_h):
        r = 1 / (1 + math.exp(-(dot(W["W_xr"], x, i) + dot(W["W_hr"], h, i) + p.b_r[i])))
        u = 1 / (1 + math.exp(-(dot(W["W_xu"], x, i) + dot(W["W_hu"], h, i) + p.b_u[i])))
        c = math.tanh(dot(W["W_xc"], x, i) + r * dot(W["W_hc"], h, i) + p.b_c[i])
        out.append((1 - u) * h[i] + u * c)
    return out


def test_zero_network_stays_at_zero():
    p = GruParams.zeros(3, 4)
    assert not gru_step(p, np.ones(3), np.zeros(4)).any()


def test_closed_update_gate_keeps_state(rng):
    p = GruParams.random(3, 4, rng)
    p.b_u[:] = -1e3
    h_prev = rng.uniform(-1, 1, 4)
    np.testing.assert_allclose(gru_step(p, rng.normal(size=3), h_prev), h_prev, atol=1e-12)


def test_matches_scalar_oracle(rng):
    for _ in range(5):
        p = GruParams.random(5, 7, rng, scale=0.8)
        x, h = rng.normal(size=5), rng.uniform(-1, 1, 7)
        np.testing.assert_allclose(gru_step(p, x, h), scalar_gru_step(p, x, h), rtol=0, atol=1e-13)


def test_step_mac_count(rng):
    p = GruParams.random(5, 7, rng)
    c = CostCounters()
    gru_step(p, np.ones(5), np.zeros(7), c)
    assert c.macs == 3 * 7 * (5 + 7)
    assert c == dense_gru_counters(5, 7, 1)


def test_dimension_errors(small_params):
    with pytest.raises(ContractError):
        gru_step(small_params, np.zeros(5), np.zeros(6))
    with pytest.raises(ContractError):
        gru_step(small_params, np.zeros(4), np.zeros(5))
    with pytest.raises(ContractError):
        GruParams(**{**dict(small_params.items()), "W_hc": np.zeros((6, 5))})


def test_sequence_edge_cases(small_params, rng):
    assert gru_sequence(small_params, np.empty((0, 4))).shape == (0, 6)
    x = rng.normal(size=4)
    np.testing.assert_array_equal(gru_sequence(small_params, [x])[0], gru_step(small_params, x, np.zeros(6)))


def test_long_sequence_bounded(rng):
    p = GruParams.random(8, 16, rng, scale=2.0)
    hs = gru_sequence(p, rng.normal(scale=3.0, size=(100, 8)))
    assert np.all(np.abs(hs) < 1.0)


def test_sequence_quantizes_state(small_params, rng):
    q = QFormat(3, 4)
    hs = gru_sequence(small_params, rng.normal(size=(20, 4)), q=q)
    np.testing.assert_array_equal(hs * 16, np.round(hs * 16))
