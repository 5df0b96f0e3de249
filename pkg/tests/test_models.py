import numpy as np
import pytest

from mzimesh.core import MeshTopology, PathElement, residual_amplitude
from mzimesh.models import (
    CrosstalkPhaseModel,
    FeatureNormalizer,
    LocalPhaseModel,
    NeuralSurrogateModel,
    TopologyMismatchError,
    load_model,
    save_model,
)

# Values computed by direct arithmetic on the per-port factor with ER = 100:
# r = 9/11, max factor (1+r)^2/4 = 100/121, min factor (1-r)^2/4 = 1/121.
F_MAX_DB = -0.8278537031645007
F_MIN_DB = -20.8278537031645


def single_mzi_model(topo, er_db=20.0, loss=0.0, phi0=0.0, phi2=np.pi / 4):
    return LocalPhaseModel(topology=topo, er_db=er_db,
                           loss_db=np.array([[loss]]),
                           phi0=np.array([phi0]), phi2=np.array([phi2]))


def random_local_model(topo, seed):
    rng = np.random.default_rng(seed)
    return LocalPhaseModel(
        topology=topo,
        er_db=rng.uniform(15, 35),
        loss_db=rng.uniform(-6, -1, size=topo.weight_shape),
        phi0=rng.uniform(0, 2 * np.pi, size=topo.n_mzis),
        phi2=rng.uniform(0.3, 1.2, size=topo.n_mzis),
    )


def test_eq_factor_extrema(single_mzi_topo):
    model = single_mzi_model(single_mzi_topo)
    w_peak = model.forward(np.array([2.0]))  # phi = pi
    w_null = model.forward(np.array([0.0]))  # phi = 0
    assert w_peak[0, 0] == pytest.approx(F_MAX_DB, abs=1e-9)
    assert w_null[0, 0] == pytest.approx(F_MIN_DB, abs=1e-9)
    assert (w_peak - w_null)[0, 0] == pytest.approx(20.0, abs=1e-9)


def test_eq_factor_with_loss(single_mzi_topo):
    model = single_mzi_model(single_mzi_topo, loss=-3.0103)
    w = model.forward(np.array([2.0]))
    assert w[0, 0] == pytest.approx(-3.8381537031645006, abs=1e-9)


def test_crosstalk_model_reduces_to_local(topo):
    local = random_local_model(topo, seed=10)
    coupled = CrosstalkPhaseModel.from_local(local)
    rng = np.random.default_rng(11)
    v = rng.uniform(0, 2, size=(1000, topo.n_mzis))
    assert np.max(np.abs(coupled.forward_batch(v) - local.forward_batch(v))) < 1e-12


def test_crosstalk_model_zero_voltage_uses_only_offsets(topo):
    local = random_local_model(topo, seed=12)
    coupled = CrosstalkPhaseModel.from_local(local)
    w0 = coupled.forward(np.zeros(topo.n_mzis))
    # with V = 0 only phi0, loss and er matter: changing phi2 is a no-op
    for key in coupled.phi2:
        coupled.phi2[key] = coupled.phi2[key] * 3.0
    assert np.array_equal(coupled.forward(np.zeros(topo.n_mzis)), w0)


def test_crosstalk_model_outside_path_voltage_matters(topo):
    local = random_local_model(topo, seed=13)
    coupled = CrosstalkPhaseModel.from_local(local)
    # MZI 2 is outside path (1,1) = {1, 4}; give it a cross coupling
    coupled.phi2[(1, 1)][0, 1] = 0.2
    v = np.zeros(topo.n_mzis)
    w_base = coupled.forward(v)[0, 0]
    v2 = v.copy()
    v2[1] = 2.0
    w_moved = coupled.forward(v2)[0, 0]
    assert abs(w_moved - w_base) > 1e-3


def test_local_phase_periodicity(topo):
    model = random_local_model(topo, seed=14)
    shifted = LocalPhaseModel(topology=topo, er_db=model.er_db,
                              loss_db=model.loss_db,
                              phi0=model.phi0 + 2 * np.pi, phi2=model.phi2)
    rng = np.random.default_rng(15)
    v = rng.uniform(0, 2, size=(200, topo.n_mzis))
    assert np.max(np.abs(model.forward_batch(v) - shifted.forward_batch(v))) < 1e-12


def test_weight_upper_bound(topo):
    model = random_local_model(topo, seed=16)
    r = residual_amplitude(model.er_db)
    per_element_max_db = 10 * np.log10(0.25 * (1 + r) ** 2)
    rng = np.random.default_rng(17)
    v = rng.uniform(0, 2, size=(500, topo.n_mzis))
    w = model.forward_batch(v)
    for (i, j) in topo.entries():
        bound = model.loss_db[j - 1, i - 1] + len(topo.path(i, j)) * per_element_max_db
        assert np.all(w[:, j - 1, i - 1] <= bound + 1e-9)


def test_surrogate_zero_network_outputs_zero_db(topo):
    norm = FeatureNormalizer().fit(np.array([[0.0] * 5, [2.0] * 5]))
    model = NeuralSurrogateModel.initialize(topo, hidden=(4,), normalizer=norm, seed=0)
    model = model.with_params(np.zeros(model.n_params))
    w = model.forward(np.ones(5))
    assert np.array_equal(w, np.zeros((3, 3)))


def test_feature_normalization_endpoints():
    norm = FeatureNormalizer().fit(np.array([[0.0], [2.0]]))
    x = norm.transform(np.array([[0.0], [1.0], [2.0]]))
    # first column is the raw voltage: 0 -> -1, 1 -> 0, 2 -> +1
    assert np.allclose(x[:, 0], [-1.0, 0.0, 1.0])
    # second column is the squared voltage over [0, 4]: 1 -> -0.5
    assert np.allclose(x[:, 1], [-1.0, -0.5, 1.0])


def test_normalizer_allows_out_of_range_inputs():
    norm = FeatureNormalizer().fit(np.array([[0.5], [1.5]]))
    x = norm.transform(np.array([[2.0]]))
    assert x[0, 0] > 1.0  # no clipping, no error


def test_normalizer_unfitted_raises(topo):
    model = NeuralSurrogateModel.initialize(topo, hidden=(4,),
                                            normalizer=FeatureNormalizer(), seed=0)
    with pytest.raises(RuntimeError):
        model.forward(np.ones(5))


def test_surrogate_single_hidden_unit(single_mzi_topo):
    # Normalizer mapping raw 0 -> feature 0 so the network core is isolated.
    norm = FeatureNormalizer(mins=np.array([-1.0, -1.0]), maxs=np.array([1.0, 1.0]))
    model = NeuralSurrogateModel.initialize(single_mzi_topo, hidden=(1,),
                                            normalizer=norm, seed=0)
    vec = np.zeros(model.n_params)
    # layout: W1 (1x2), b1 (1), W2 (1x1), b2 (1)
    vec[3] = 1.0  # output weight
    vec[4] = -5.0  # output bias
    model = model.with_params(vec)
    w = model.forward(np.array([0.0]))
    assert w[0, 0] == pytest.approx(-5.0, abs=1e-12)


def test_surrogate_bounded_output(topo):
    norm = FeatureNormalizer().fit(np.array([[0.0] * 5, [2.0] * 5]))
    rng = np.random.default_rng(18)
    model = NeuralSurrogateModel.initialize(topo, hidden=(8, 8), normalizer=norm,
                                            seed=19)
    # random but bounded parameters; tanh saturation bounds the output
    model = model.with_params(rng.uniform(-2, 2, size=model.n_params))
    v = rng.uniform(0, 2, size=(300, 5))
    w = model.forward_batch(v)
    w_l, b_l = model.weights[-1], model.biases[-1]
    bound = np.abs(w_l).sum(axis=1) + np.abs(b_l)
    assert np.all(np.abs(w.reshape(len(v), -1)) <= bound[None, :] + 1e-12)


def test_model_save_load_round_trip(tmp_path, topo):
    local = random_local_model(topo, seed=20)
    p = tmp_path / "m1.json"
    save_model(local, p)
    loaded = load_model(p, topo)
    assert isinstance(loaded, LocalPhaseModel)
    assert np.allclose(loaded.param_vector(), local.param_vector())

    coupled = CrosstalkPhaseModel.from_local(local)
    p2 = tmp_path / "m2.json"
    save_model(coupled, p2)
    loaded2 = load_model(p2, topo)
    assert np.allclose(loaded2.param_vector(), coupled.param_vector())

    norm = FeatureNormalizer().fit(np.array([[0.0] * 5, [2.0] * 5]))
    net = NeuralSurrogateModel.initialize(topo, hidden=(6,), normalizer=norm, seed=3)
    p3 = tmp_path / "m3.json"
    save_model(net, p3)
    loaded3 = load_model(p3, topo)
    rng = np.random.default_rng(21)
    v = rng.uniform(0, 2, size=(20, 5))
    assert np.array_equal(loaded3.forward_batch(v), net.forward_batch(v))


def test_model_topology_hash_mismatch(tmp_path, topo, single_mzi_topo):
    model = single_mzi_model(single_mzi_topo)
    p = tmp_path / "m1.json"
    save_model(model, p)
    with pytest.raises(TopologyMismatchError):
        load_model(p, topo)


def test_param_vector_round_trip(topo):
    local = random_local_model(topo, seed=22)
    rebuilt = local.with_params(local.param_vector())
    assert np.allclose(rebuilt.param_vector(), local.param_vector())

    coupled = CrosstalkPhaseModel.from_local(local)
    rebuilt2 = coupled.with_params(coupled.param_vector())
    assert np.allclose(rebuilt2.param_vector(), coupled.param_vector())
