import numpy as np
import pytest

from deltanet.data import (
    gen_synthetic,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)
from deltanet.delta_gru import delta_gru_sequence, mean_occupancy
from deltanet.errors import ContractError, ParseError, ValidationError
from deltanet.gru import GruParams
from deltanet.tensor import QFormat


def _input_occupancy(ds, theta):
    p = GruParams.zeros(ds.n_x, 1)
    occ = [mean_occupancy(delta_gru_sequence(p, s, theta)[1])[0] for s in ds.sequences]
    return float(np.mean(occ))


def test_generation_is_deterministic():
    a = gen_synthetic(3, 4, 20, 0.9, 0.2, 10, seed=5)
    b = gen_synthetic(3, 4, 20, 0.9, 0.2, 10, seed=5)
    assert np.array_equal(a.labels, b.labels)
    assert all(np.array_equal(x, y) for x, y in zip(a.sequences, b.sequences))
    c = gen_synthetic(3, 4, 20, 0.9, 0.2, 10, seed=6)
    assert not np.array_equal(np.stack(a.sequences), np.stack(c.sequences))


def test_smoothness_controls_redundancy():
    smooth = gen_synthetic(3, 8, 200, 0.99, 0.05, 10, seed=1)
    rough = gen_synthetic(3, 8, 200, 0.0, 0.5, 10, seed=1)
    assert _input_occupancy(smooth, 0.1) < 0.3
    assert _input_occupancy(rough, 0.01) > 0.95


def test_task_seed_fixes_prototypes():
    a = gen_synthetic(2, 3, 10, 0.5, 0.0, 6, seed=1)
    b = gen_synthetic(2, 3, 10, 0.5, 0.0, 6, seed=2)
    protos_a = {int(l): s for s, l in zip(a.sequences, a.labels)}
    protos_b = {int(l): s for s, l in zip(b.sequences, b.labels)}
    for label in set(protos_a) & set(protos_b):
        assert np.array_equal(protos_a[label], protos_b[label])


def test_generation_clips_to_q_range():
    ds = gen_synthetic(2, 3, 50, 0.5, 5.0, 5, seed=0, q=QFormat(2, 5))
    assert np.max(np.abs(np.stack(ds.sequences))) <= 2.0


def test_generation_contract():
    with pytest.raises(ContractError):
        gen_synthetic(2, 3, 10, 1.5, 0.1, 5, seed=0)
    with pytest.raises(ContractError):
        gen_synthetic(2, 3, 10, 0.5, -0.1, 5, seed=0)


@pytest.fixture
def saved(tmp_path, rng):
    p = GruParams.random(3, 4, rng)
    W_out, b_out = rng.normal(size=(2, 4)), rng.normal(size=2)
    path = tmp_path / "model.txt"
    save_model(path, p, W_out, b_out, QFormat(3, 4), 0.1)
    return path, p, W_out, b_out


def test_model_roundtrip_exact(saved):
    path, p, W_out, b_out = saved
    m = load_model(path)
    for (name, a), (_, b) in zip(p.items(), m.params.items()):
        assert np.array_equal(a, b), name
    assert np.array_equal(m.W_out, W_out) and np.array_equal(m.b_out, b_out)
    assert m.q == QFormat(3, 4) and m.theta == 0.1


def test_model_without_readout(tmp_path, rng):
    p = GruParams.random(2, 3, rng)
    save_model(tmp_path / "m.txt", p)
    m = load_model(tmp_path / "m.txt")
    assert m.W_out is None and m.q is None and m.n_classes == 0
    with pytest.raises(ValidationError):
        m.model()


def test_truncated_model_reports_line(saved):
    path = saved[0]
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:12]) + "\n")
    with pytest.raises(ParseError) as exc:
        load_model(path)
    assert exc.value.lineno == 13


def test_bad_number_reports_line(saved):
    path = saved[0]
    lines = path.read_text().splitlines()
    lines[7] = lines[7].replace(lines[7].split()[0], "x1.5", 1)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as exc:
        load_model(path)
    assert exc.value.lineno == 8


def test_mismatched_dims_name_the_matrix(saved):
    path = saved[0]
    text = path.read_text().replace("matrix W_hr 4 4", "matrix W_hr 4 3")
    lines = text.splitlines()
    start = lines.index("matrix W_hr 4 3")
    for i in range(start + 1, start + 5):
        lines[i] = " ".join(lines[i].split()[:3])
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValidationError, match="W_hr"):
        load_model(path)


def test_wrong_magic(tmp_path):
    (tmp_path / "x.txt").write_text("HELLO 1\n")
    with pytest.raises(ParseError):
        load_model(tmp_path / "x.txt")


def test_dataset_roundtrip(tmp_path):
    ds = gen_synthetic(3, 4, 12, 0.9, 0.3, 7, seed=2)
    save_dataset(tmp_path / "d.txt", ds)
    back = load_dataset(tmp_path / "d.txt")
    assert np.array_equal(back.labels, ds.labels)
    assert all(np.array_equal(a, b) for a, b in zip(back.sequences, ds.sequences))
    assert back.meta["seed"] == 2 and back.meta["smoothness"] == 0.9


def test_dataset_label_out_of_range(tmp_path):
    ds = gen_synthetic(3, 2, 3, 0.5, 0.3, 2, seed=2)
    save_dataset(tmp_path / "d.txt", ds)
    text = (tmp_path / "d.txt").read_text().replace("n_classes 3", "n_classes 1")
    (tmp_path / "d.txt").write_text(text)
    if ds.labels.max() > 0:
        with pytest.raises(ValidationError):
            load_dataset(tmp_path / "d.txt")
