import numpy as np
import pytest

from mzimesh.core import (
    MeshTopology,
    PathElement,
    apply_weights,
    db_to_linear,
    element_factor,
    linear_to_db,
    residual_amplitude,
    validate_topology,
)


def test_db_to_linear_identity():
    assert db_to_linear(0.0) == 1.0


def test_db_to_linear_half():
    # 10**(-3.0103/10) computed directly
    assert db_to_linear(-3.0103) == pytest.approx(0.4999999950079739, rel=1e-12)


def test_db_to_linear_eq1_minimum():
    # minimum Eq-style factor for ER = 100 is 1/121
    assert db_to_linear(-20.8278537031645) == pytest.approx(1.0 / 121.0, rel=1e-10)


def test_db_to_linear_rejects_nonfinite():
    with pytest.raises(ValueError):
        db_to_linear(float("nan"))
    with pytest.raises(ValueError):
        db_to_linear(float("inf"))


def test_linear_to_db_values():
    assert linear_to_db(1.0) == 0.0
    assert linear_to_db(0.5) == pytest.approx(-3.010299956639812, rel=1e-12)


def test_linear_to_db_rejects_nonpositive():
    with pytest.raises(ValueError):
        linear_to_db(0.0)
    with pytest.raises(ValueError):
        linear_to_db(-1.0)


def test_round_trip_property():
    rng = np.random.default_rng(0)
    x_db = rng.uniform(-60.0, 0.0, size=500)
    back = linear_to_db(db_to_linear(x_db))
    assert np.allclose(back, x_db, rtol=1e-12, atol=1e-12)


def test_apply_weights_identity_pattern():
    w = np.full((3, 3), -np.inf)
    np.fill_diagonal(w, 0.0)
    out = apply_weights(w, [1.0, 2.0, 3.0])
    assert np.allclose(out, [1.0, 2.0, 3.0])


def test_apply_weights_uniform_half():
    w = np.full((3, 3), -3.0103)
    out = apply_weights(w, [1.0, 1.0, 1.0])
    assert np.allclose(out, [1.5, 1.5, 1.5], atol=1e-7)


def test_apply_weights_zero_input():
    w = np.full((3, 3), -1.0)
    assert np.allclose(apply_weights(w, np.zeros(3)), np.zeros(3))


def test_apply_weights_shape_error():
    with pytest.raises(ValueError):
        apply_weights(np.zeros((3, 3)), np.ones(4))


def test_apply_weights_linearity():
    rng = np.random.default_rng(1)
    w = rng.uniform(-20, 0, size=(4, 3))
    p = rng.uniform(0, 2, size=3)
    q = rng.uniform(0, 2, size=3)
    a, b = 0.7, 1.9
    lhs = apply_weights(w, a * p + b * q)
    rhs = a * apply_weights(w, p) + b * apply_weights(w, q)
    assert np.allclose(lhs, rhs, rtol=1e-12)


def test_default_topology_is_valid(topo):
    assert validate_topology(topo) == []
    assert topo.n_inputs == 3 and topo.n_outputs == 3 and topo.n_mzis == 5
    assert [e.mzi for e in topo.path(1, 3)] == [1, 3, 5]


def test_validate_topology_empty_path():
    t = MeshTopology(1, 1, 2, paths={(1, 1): []})
    report = validate_topology(t)
    assert len(report) == 1 and "empty" in report[0]


def test_validate_topology_bad_mzi_index():
    t = MeshTopology(1, 1, 2, paths={(1, 1): [PathElement(3)]})
    report = validate_topology(t)
    assert len(report) == 1 and "outside" in report[0]


def test_validate_topology_repeated_mzi():
    t = MeshTopology(1, 1, 2, paths={(1, 1): [PathElement(1), PathElement(1, "bar")]})
    assert any("repeats" in msg for msg in validate_topology(t))


def test_topology_json_round_trip(tmp_path, topo):
    path = tmp_path / "topo.json"
    topo.save(path)
    loaded = MeshTopology.load(path)
    assert loaded == topo
    assert loaded.content_hash() == topo.content_hash()


def test_element_factor_bounds():
    rng = np.random.default_rng(2)
    r = residual_amplitude(25.0)
    phi = rng.uniform(-10, 10, size=1000)
    for sign in (-1.0, 1.0):
        f = element_factor(phi, sign, r)
        assert np.all(f >= 0.25 * (1 - r) ** 2 - 1e-15)
        assert np.all(f <= 0.25 * (1 + r) ** 2 + 1e-15)


def test_ports_are_energy_complements():
    r = 1.0  # ideal extinction: cross + bar = 1
    phi = np.linspace(0, 2 * np.pi, 50)
    total = element_factor(phi, -1.0, r) + element_factor(phi, 1.0, r)
    assert np.allclose(total, 1.0)
