"""Forward models mapping heater voltages to predicted weight matrices.

Three model families are fitted to measured (voltage, weight) data:

* :class:`LocalPhaseModel` ("m1") - each MZI's phase depends only on its
  own voltage, ``phi_k = phi0[k] + phi2[k] * v_k**2``.
* :class:`CrosstalkPhaseModel` ("m2") - every voltage may contribute to
  every phase on a path, ``phi_k = phi0[k] + sum_m phi2[k, m] * v_m**2``,
  with all phase parameters refitted independently per weight entry.
* :class:`NeuralSurrogateModel` ("m3") - a dense network from the
  normalized features ``[v, v**2]`` straight to the dB weight matrix,
  with tanh hidden units and a linear output layer.

All models predict dB, share the -90 dB floor of :mod:`mzimesh.core`
(with zero subgradient on clamped entries), and expose exact analytic
parameter gradients used by the fitting module and verified against
finite differences in the test suite.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DB_FLOOR_DB,
    MeshTopology,
    element_factor,
    residual_amplitude,
)
from .jsonio import read_json, write_json

_LOG10_OVER_10 = math.log(10.0) / 10.0
_TEN_OVER_LOG10 = 10.0 / math.log(10.0)


def residual_amplitude_grad(er_db: float) -> float:
    """Derivative of :func:`mzimesh.core.residual_amplitude` w.r.t. er_db."""
    er = 10.0 ** (er_db / 10.0)
    sqrt_er = math.sqrt(er)
    # dr/dER = 1 / (sqrt(ER) * (sqrt(ER) + 1)**2),  dER/der_db = ln(10)/10 * ER
    return _LOG10_OVER_10 * sqrt_er / (sqrt_er + 1.0) ** 2


def factor_db_and_partials(phi, sign, r):
    """Per-element transmission in dB plus its partials.

    Returns ``(f_db, df_db_dphi, df_db_dr)`` for phase array ``phi``,
    port sign(s) ``sign`` (broadcastable) and residual amplitude ``r``.
    """
    cos_phi = np.cos(phi)
    f = 0.25 * (r * r + 1.0 + sign * 2.0 * r * cos_phi)
    f_db = 10.0 * np.log10(f)
    df_dphi = -sign * 0.5 * r * np.sin(phi)
    df_dr = 0.5 * (r + sign * cos_phi)
    scale = _TEN_OVER_LOG10 / f
    return f_db, scale * df_dphi, scale * df_dr


def _apply_floor(pred, *grads):
    """Clamp predictions at the dB floor and zero the matching gradients."""
    clamped = pred < DB_FLOOR_DB
    if np.any(clamped):
        pred = np.where(clamped, DB_FLOOR_DB, pred)
        grads = tuple(np.where(clamped[..., None], 0.0, g) if g.ndim == pred.ndim + 1
                      else np.where(clamped, 0.0, g) for g in grads)
    return (pred, *grads)


@dataclass
class LocalPhaseModel:
    """Physics model with one quadratic phase law per MZI.

    Parameter vector layout (length 2M + 1 + n_outputs*n_inputs):
    ``[phi0 (M), phi2 (M), er_db, loss_db row-major (by output, input)]``.
    """

    topology: MeshTopology
    er_db: float
    loss_db: np.ndarray  # (n_outputs, n_inputs)
    phi0: np.ndarray  # (M,)
    phi2: np.ndarray  # (M,)

    kind = "m1"

    def __post_init__(self):
        self.loss_db = np.asarray(self.loss_db, dtype=float)
        self.phi0 = np.asarray(self.phi0, dtype=float)
        self.phi2 = np.asarray(self.phi2, dtype=float)

    @property
    def n_params(self) -> int:
        n_out, n_in = self.topology.weight_shape
        return 2 * self.topology.n_mzis + 1 + n_out * n_in

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.phi0, self.phi2, [self.er_db],
                               self.loss_db.ravel()])

    def with_params(self, vec: np.ndarray) -> "LocalPhaseModel":
        m = self.topology.n_mzis
        n_out, n_in = self.topology.weight_shape
        return LocalPhaseModel(
            topology=self.topology,
            phi0=vec[:m].copy(),
            phi2=vec[m:2 * m].copy(),
            er_db=float(vec[2 * m]),
            loss_db=vec[2 * m + 1:].reshape(n_out, n_in).copy(),
        )

    def phases(self, voltages: np.ndarray) -> np.ndarray:
        v = np.asarray(voltages, dtype=float)
        return self.phi0 + self.phi2 * v * v

    def forward(self, v) -> np.ndarray:
        return self.forward_batch(np.asarray(v, dtype=float)[None, :])[0]

    def forward_batch(self, voltages: np.ndarray) -> np.ndarray:
        voltages = np.atleast_2d(np.asarray(voltages, dtype=float))
        phi = self.phases(voltages)
        r = residual_amplitude(self.er_db)
        n = len(voltages)
        n_out, n_in = self.topology.weight_shape
        w = np.empty((n, n_out, n_in))
        for (i, j) in self.topology.entries():
            idx, signs = self.topology.path_arrays(i, j)
            f = element_factor(phi[:, idx], signs, r)
            w[:, j - 1, i - 1] = (self.loss_db[j - 1, i - 1]
                                  + np.sum(10.0 * np.log10(f), axis=1))
        return np.maximum(w, DB_FLOOR_DB)

    def weight_jacobian(self, v) -> np.ndarray:
        """d(each weight dB)/d(param vector); shape (n_out, n_in, n_params)."""
        v = np.asarray(v, dtype=float)
        m = self.topology.n_mzis
        n_out, n_in = self.topology.weight_shape
        v2 = v * v
        phi = self.phi0 + self.phi2 * v2
        r = residual_amplitude(self.er_db)
        dr = residual_amplitude_grad(self.er_db)
        jac = np.zeros((n_out, n_in, self.n_params))
        for (i, j) in self.topology.entries():
            idx, signs = self.topology.path_arrays(i, j)
            f_db, d_phi, d_r = factor_db_and_partials(phi[idx], signs, r)
            pred = self.loss_db[j - 1, i - 1] + f_db.sum()
            if pred < DB_FLOOR_DB:
                continue  # clamped: subgradient 0
            row = jac[j - 1, i - 1]
            row[idx] = d_phi
            row[m + idx] = d_phi * v2[idx]
            row[2 * m] = (d_r * dr).sum()
            row[2 * m + 1 + (j - 1) * n_in + (i - 1)] = 1.0
        return jac

    def rmse_and_grad(self, voltages: np.ndarray, measured_db: np.ndarray):
        """RMSE over all samples and entries, plus its parameter gradient."""
        voltages = np.asarray(voltages, dtype=float)
        measured_db = np.asarray(measured_db, dtype=float)
        m = self.topology.n_mzis
        n_out, n_in = self.topology.weight_shape
        v2 = voltages * voltages
        phi = self.phi0[None, :] + self.phi2[None, :] * v2
        r = residual_amplitude(self.er_db)
        dr = residual_amplitude_grad(self.er_db)
        n = len(voltages)
        n_tot = n * n_out * n_in
        sq_sum = 0.0
        acc = np.zeros(self.n_params)  # sum of e * d(pred)/d(theta)
        for (i, j) in self.topology.entries():
            idx, signs = self.topology.path_arrays(i, j)
            f_db, d_phi, d_r = factor_db_and_partials(phi[:, idx], signs, r)
            pred = self.loss_db[j - 1, i - 1] + f_db.sum(axis=1)
            pred, d_phi, d_r = _apply_floor(pred, d_phi, d_r)
            e = pred - measured_db[:, j - 1, i - 1]
            sq_sum += float(e @ e)
            acc[idx] += e @ d_phi
            acc[m + idx] += e @ (d_phi * v2[:, idx])
            acc[2 * m] += float(e @ (d_r.sum(axis=1) * dr))
            acc[2 * m + 1 + (j - 1) * n_in + (i - 1)] += e.sum()
        rmse = math.sqrt(sq_sum / n_tot)
        grad = acc / (n_tot * rmse) if rmse > 0 else np.zeros_like(acc)
        return rmse, grad

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "topology_hash": self.topology.content_hash(),
            "er_db": float(self.er_db),
            "loss_db": self.loss_db.tolist(),
            "phi0": self.phi0.tolist(),
            "phi2": self.phi2.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, topology: MeshTopology) -> "LocalPhaseModel":
        _check_topology_hash(d, topology)
        return cls(topology=topology, er_db=d["er_db"],
                   loss_db=np.array(d["loss_db"]), phi0=np.array(d["phi0"]),
                   phi2=np.array(d["phi2"]))


@dataclass
class CrosstalkPhaseModel:
    """Physics model with per-weight phase laws over all voltages.

    For each weight entry ``(i, j)`` and each MZI ``k`` on its path,
    ``phi = phi0[(i, j)][k] + phi2[(i, j)][k] @ v**2``, so voltages of
    MZIs outside the path can move the weight.  Every entry owns an
    independent parameter block, fitted separately:
    ``[phi0 (|K|), phi2 row-major (|K| * M), er_db, loss_db]``, blocks
    concatenated over entries in canonical (output, input) order.
    """

    topology: MeshTopology
    er_db: np.ndarray  # (n_outputs, n_inputs); scalar input is broadcast
    loss_db: np.ndarray  # (n_outputs, n_inputs)
    phi0: dict  # (i, j) -> (|K_ij|,)
    phi2: dict  # (i, j) -> (|K_ij|, M)

    kind = "m2"

    def __post_init__(self):
        n_out, n_in = self.topology.weight_shape
        self.er_db = np.broadcast_to(
            np.asarray(self.er_db, dtype=float), (n_out, n_in)).copy()
        self.loss_db = np.asarray(self.loss_db, dtype=float)
        self.phi0 = {k: np.asarray(a, dtype=float) for k, a in self.phi0.items()}
        self.phi2 = {k: np.asarray(a, dtype=float) for k, a in self.phi2.items()}

    @classmethod
    def from_local(cls, local: LocalPhaseModel) -> "CrosstalkPhaseModel":
        """Embed a local model: diagonal couplings, zero cross terms."""
        topo = local.topology
        m = topo.n_mzis
        phi0, phi2 = {}, {}
        for (i, j) in topo.entries():
            idx, _ = topo.path_arrays(i, j)
            phi0[(i, j)] = local.phi0[idx].copy()
            block = np.zeros((len(idx), m))
            block[np.arange(len(idx)), idx] = local.phi2[idx]
            phi2[(i, j)] = block
        return cls(topology=topo, er_db=local.er_db,
                   loss_db=local.loss_db.copy(), phi0=phi0, phi2=phi2)

    def entry_param_vector(self, i: int, j: int) -> np.ndarray:
        return np.concatenate([
            self.phi0[(i, j)], self.phi2[(i, j)].ravel(),
            [self.er_db[j - 1, i - 1]], [self.loss_db[j - 1, i - 1]],
        ])

    def set_entry_params(self, i: int, j: int, vec: np.ndarray) -> None:
        n_k = len(self.topology.paths[(i, j)])
        m = self.topology.n_mzis
        self.phi0[(i, j)] = vec[:n_k].copy()
        self.phi2[(i, j)] = vec[n_k:n_k + n_k * m].reshape(n_k, m).copy()
        self.er_db[j - 1, i - 1] = vec[n_k + n_k * m]
        self.loss_db[j - 1, i - 1] = vec[n_k + n_k * m + 1]

    @property
    def n_params(self) -> int:
        return sum(len(self.entry_param_vector(i, j))
                   for (i, j) in self.topology.entries())

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.entry_param_vector(i, j)
                               for (i, j) in self.topology.entries()])

    def with_params(self, vec: np.ndarray) -> "CrosstalkPhaseModel":
        out = CrosstalkPhaseModel(
            topology=self.topology, er_db=self.er_db.copy(),
            loss_db=self.loss_db.copy(),
            phi0={k: a.copy() for k, a in self.phi0.items()},
            phi2={k: a.copy() for k, a in self.phi2.items()})
        pos = 0
        for (i, j) in self.topology.entries():
            size = len(self.entry_param_vector(i, j))
            out.set_entry_params(i, j, vec[pos:pos + size])
            pos += size
        return out

    def entry_phases(self, i: int, j: int, voltages: np.ndarray) -> np.ndarray:
        v2 = np.atleast_2d(voltages) ** 2
        return self.phi0[(i, j)][None, :] + v2 @ self.phi2[(i, j)].T

    def forward(self, v) -> np.ndarray:
        return self.forward_batch(np.asarray(v, dtype=float)[None, :])[0]

    def forward_batch(self, voltages: np.ndarray) -> np.ndarray:
        voltages = np.atleast_2d(np.asarray(voltages, dtype=float))
        n = len(voltages)
        n_out, n_in = self.topology.weight_shape
        w = np.empty((n, n_out, n_in))
        for (i, j) in self.topology.entries():
            _, signs = self.topology.path_arrays(i, j)
            r = residual_amplitude(self.er_db[j - 1, i - 1])
            phi = self.entry_phases(i, j, voltages)
            f = element_factor(phi, signs, r)
            w[:, j - 1, i - 1] = (self.loss_db[j - 1, i - 1]
                                  + np.sum(10.0 * np.log10(f), axis=1))
        return np.maximum(w, DB_FLOOR_DB)

    def entry_jacobian(self, i: int, j: int, v) -> np.ndarray:
        """d(weight_ij dB)/d(entry param block) at a single voltage vector."""
        v = np.asarray(v, dtype=float)
        _, signs = self.topology.path_arrays(i, j)
        er = self.er_db[j - 1, i - 1]
        r = residual_amplitude(er)
        phi = self.entry_phases(i, j, v[None, :])[0]
        f_db, d_phi, d_r = factor_db_and_partials(phi, signs, r)
        pred = self.loss_db[j - 1, i - 1] + f_db.sum()
        n_k = len(signs)
        m = self.topology.n_mzis
        jac = np.zeros(n_k + n_k * m + 2)
        if pred < DB_FLOOR_DB:
            return jac
        jac[:n_k] = d_phi
        jac[n_k:n_k + n_k * m] = (d_phi[:, None] * (v * v)[None, :]).ravel()
        jac[n_k + n_k * m] = (d_r * residual_amplitude_grad(er)).sum()
        jac[n_k + n_k * m + 1] = 1.0
        return jac

    def weight_jacobian(self, v) -> np.ndarray:
        """Block-diagonal Jacobian in the full parameter layout."""
        n_out, n_in = self.topology.weight_shape
        jac = np.zeros((n_out, n_in, self.n_params))
        pos = 0
        for (i, j) in self.topology.entries():
            block = self.entry_jacobian(i, j, v)
            jac[j - 1, i - 1, pos:pos + len(block)] = block
            pos += len(block)
        return jac

    def rmse_and_grad(self, voltages: np.ndarray, measured_db: np.ndarray):
        voltages = np.asarray(voltages, dtype=float)
        measured_db = np.asarray(measured_db, dtype=float)
        v2 = voltages * voltages
        n_out, n_in = self.topology.weight_shape
        n_tot = len(voltages) * n_out * n_in
        sq_sum = 0.0
        blocks = []
        for (i, j) in self.topology.entries():
            _, signs = self.topology.path_arrays(i, j)
            er = self.er_db[j - 1, i - 1]
            r = residual_amplitude(er)
            phi = self.phi0[(i, j)][None, :] + v2 @ self.phi2[(i, j)].T
            f_db, d_phi, d_r = factor_db_and_partials(phi, signs, r)
            pred = self.loss_db[j - 1, i - 1] + f_db.sum(axis=1)
            pred, d_phi, d_r = _apply_floor(pred, d_phi, d_r)
            e = pred - measured_db[:, j - 1, i - 1]
            sq_sum += float(e @ e)
            g_phi0 = e @ d_phi
            g_phi2 = (d_phi * e[:, None]).T @ v2
            g_er = float(e @ d_r.sum(axis=1)) * residual_amplitude_grad(er)
            blocks.append(np.concatenate([g_phi0, g_phi2.ravel(),
                                          [g_er], [e.sum()]]))
        rmse = math.sqrt(sq_sum / n_tot)
        acc = np.concatenate(blocks)
        grad = acc / (n_tot * rmse) if rmse > 0 else np.zeros_like(acc)
        return rmse, grad

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "topology_hash": self.topology.content_hash(),
            "er_db": self.er_db.tolist(),
            "loss_db": self.loss_db.tolist(),
            "entries": [
                {
                    "i": i,
                    "j": j,
                    "phi0": self.phi0[(i, j)].tolist(),
                    "phi2": self.phi2[(i, j)].tolist(),
                }
                for (i, j) in self.topology.entries()
            ],
        }

    @classmethod
    def from_dict(cls, d: dict, topology: MeshTopology) -> "CrosstalkPhaseModel":
        _check_topology_hash(d, topology)
        phi0 = {(e["i"], e["j"]): np.array(e["phi0"]) for e in d["entries"]}
        phi2 = {(e["i"], e["j"]): np.array(e["phi2"]) for e in d["entries"]}
        return cls(topology=topology, er_db=np.array(d["er_db"]),
                   loss_db=np.array(d["loss_db"]), phi0=phi0, phi2=phi2)


@dataclass
class FeatureNormalizer:
    """Per-feature min-max map of ``[v, v**2]`` onto [-1, 1].

    Ranges are taken from the training data only; transformed test data
    may legitimately fall outside [-1, 1].
    """

    mins: np.ndarray | None = None
    maxs: np.ndarray | None = None

    @staticmethod
    def features(voltages: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(np.asarray(voltages, dtype=float))
        return np.concatenate([v, v * v], axis=1)

    @property
    def fitted(self) -> bool:
        return self.mins is not None

    def fit(self, voltages: np.ndarray) -> "FeatureNormalizer":
        x = self.features(voltages)
        self.mins = x.min(axis=0)
        self.maxs = x.max(axis=0)
        return self

    def transform(self, voltages: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise RuntimeError("normalizer has not been fitted")
        x = self.features(voltages)
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = 2.0 * (x - self.mins) / safe - 1.0
        return np.where(span > 0, out, 0.0)

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureNormalizer":
        return cls(mins=np.array(d["mins"]), maxs=np.array(d["maxs"]))


@dataclass
class NeuralSurrogateModel:
    """Dense tanh network from normalized ``[v, v**2]`` features to dB weights.

    ``layer_sizes`` runs from the 2M-wide input to the
    ``n_outputs * n_inputs``-wide linear output; outputs are reshaped
    row-major (output index varies slowest).  Parameter vector layout:
    ``[W1 row-major, b1, W2, b2, ...]``.
    """

    topology: MeshTopology
    layer_sizes: list
    weights: list  # [(n_l, n_{l-1})]
    biases: list  # [(n_l,)]
    normalizer: FeatureNormalizer

    kind = "m3"

    @classmethod
    def initialize(cls, topology: MeshTopology, hidden: tuple,
                   normalizer: FeatureNormalizer,
                   seed: int = 0) -> "NeuralSurrogateModel":
        """Seeded symmetric-uniform init, scale sqrt(6 / (fan_in + fan_out))."""
        n_out, n_in = topology.weight_shape
        sizes = [2 * topology.n_mzis, *hidden, n_out * n_in]
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            a = math.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-a, a, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(topology=topology, layer_sizes=sizes, weights=weights,
                   biases=biases, normalizer=normalizer)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def param_vector(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def with_params(self, vec: np.ndarray) -> "NeuralSurrogateModel":
        weights, biases = [], []
        pos = 0
        for w, b in zip(self.weights, self.biases):
            weights.append(vec[pos:pos + w.size].reshape(w.shape).copy())
            pos += w.size
            biases.append(vec[pos:pos + b.size].copy())
            pos += b.size
        return NeuralSurrogateModel(
            topology=self.topology, layer_sizes=list(self.layer_sizes),
            weights=weights, biases=biases, normalizer=self.normalizer)

    def _activations(self, x: np.ndarray) -> list:
        acts = [x]
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w.T + b
            acts.append(np.tanh(z) if l < len(self.weights) - 1 else z)
        return acts

    def forward_batch(self, voltages: np.ndarray) -> np.ndarray:
        x = self.normalizer.transform(voltages)
        y = self._activations(x)[-1]
        n_out, n_in = self.topology.weight_shape
        return np.maximum(y.reshape(len(y), n_out, n_in), DB_FLOOR_DB)

    def forward(self, v) -> np.ndarray:
        return self.forward_batch(np.asarray(v, dtype=float)[None, :])[0]

    def _backprop(self, acts: list, delta: np.ndarray) -> np.ndarray:
        """Parameter gradient given d(objective)/d(network output)."""
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        for l in range(len(self.weights) - 1, -1, -1):
            grads_w[l] = delta.T @ acts[l]
            grads_b[l] = delta.sum(axis=0)
            if l > 0:
                delta = (delta @ self.weights[l]) * (1.0 - acts[l] ** 2)
        parts = []
        for gw, gb in zip(grads_w, grads_b):
            parts.append(gw.ravel())
            parts.append(gb)
        return np.concatenate(parts)

    def weight_jacobian(self, v) -> np.ndarray:
        """d(each weight dB)/d(params) via one backprop per output unit."""
        x = self.normalizer.transform(np.asarray(v, dtype=float)[None, :])
        acts = self._activations(x)
        y = acts[-1][0]
        n_out, n_in = self.topology.weight_shape
        jac = np.zeros((n_out * n_in, self.n_params))
        for o in range(n_out * n_in):
            if y[o] < DB_FLOOR_DB:
                continue
            delta = np.zeros((1, n_out * n_in))
            delta[0, o] = 1.0
            jac[o] = self._backprop(acts, delta)
        return jac.reshape(n_out, n_in, self.n_params)

    def rmse_and_grad(self, voltages: np.ndarray, measured_db: np.ndarray):
        x = self.normalizer.transform(voltages)
        acts = self._activations(x)
        n_out, n_in = self.topology.weight_shape
        pred = acts[-1]
        clamped = pred < DB_FLOOR_DB
        e = (np.maximum(pred, DB_FLOOR_DB)
             - np.asarray(measured_db, dtype=float).reshape(len(pred), -1))
        n_tot = e.size
        rmse = math.sqrt(float(np.sum(e * e)) / n_tot)
        if rmse == 0:
            return 0.0, np.zeros(self.n_params)
        delta = np.where(clamped, 0.0, e) / (n_tot * rmse)
        return rmse, self._backprop(acts, delta)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "topology_hash": self.topology.content_hash(),
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "normalizer": self.normalizer.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict, topology: MeshTopology) -> "NeuralSurrogateModel":
        _check_topology_hash(d, topology)
        return cls(
            topology=topology,
            layer_sizes=list(d["layer_sizes"]),
            weights=[np.array(w) for w in d["weights"]],
            biases=[np.array(b) for b in d["biases"]],
            normalizer=FeatureNormalizer.from_dict(d["normalizer"]),
        )


MODEL_KINDS = {
    "m1": LocalPhaseModel,
    "m2": CrosstalkPhaseModel,
    "m3": NeuralSurrogateModel,
}


class TopologyMismatchError(ValueError):
    """A model file was fitted against a different topology."""


def _check_topology_hash(d: dict, topology: MeshTopology) -> None:
    stored = d.get("topology_hash")
    if stored and stored != topology.content_hash():
        raise TopologyMismatchError(
            f"model was fitted against topology {stored[:12]}..., "
            f"got {topology.content_hash()[:12]}...")


def save_model(model, path) -> None:
    write_json(path, model.to_dict())


def load_model(path, topology: MeshTopology):
    d = read_json(path)
    kind = d.get("kind")
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    return MODEL_KINDS[kind].from_dict(d, topology)
