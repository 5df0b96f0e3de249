"""Ground-truth virtual chip standing in for a fabricated MZI mesh.

The chip maps heater voltage vectors to measured weight matrices.  Its
phase law is deliberately richer than any of the fitted models: besides
the quadratic self-heating term it has cross-heater quadratic couplings
(thermal crosstalk) and a small quartic term (model mismatch), plus
Gaussian measurement noise applied in the dB domain:

    phi_k = phi0[k] + phi2[k] * v_k**2
            + sum_{m != k} xt[k, m] * v_m**2
            + phi4[k] * v_k**4

Weights follow the per-port interference factors of :mod:`mzimesh.core`
times a per-path loss.  With crosstalk and quartic terms zeroed and noise
off, the chip coincides exactly with the local physics model.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DB_FLOOR_DB,
    DEFAULT_V_MAX,
    DEFAULT_V_MIN,
    MeshTopology,
    check_voltages,
    default_topology,
    element_factor,
    residual_amplitude,
)
from .data import Dataset, DatasetMeta
from .jsonio import read_json, sha256_of_obj, write_json


@dataclass
class VirtualChipParams:
    """Ground-truth parameters of the virtual chip.

    ``xt`` is the cross-heater phase coupling matrix in rad/V**2 with a
    zero diagonal; ``phi4`` adds curvature the quadratic models cannot
    represent.  ``loss_db`` is indexed ``[j - 1, i - 1]`` for the path
    from input i to output j.
    """

    topology: MeshTopology
    phi0: np.ndarray  # (M,) rad
    phi2: np.ndarray  # (M,) rad/V^2
    xt: np.ndarray  # (M, M) rad/V^2, zero diagonal
    phi4: np.ndarray  # (M,) rad/V^4
    er_db: float
    loss_db: np.ndarray  # (n_outputs, n_inputs), <= 0 dB
    noise_sigma_db: float
    seed: int
    v_min: float = DEFAULT_V_MIN
    v_max: float = DEFAULT_V_MAX

    def __post_init__(self):
        self.phi0 = np.asarray(self.phi0, dtype=float)
        self.phi2 = np.asarray(self.phi2, dtype=float)
        self.xt = np.asarray(self.xt, dtype=float)
        self.phi4 = np.asarray(self.phi4, dtype=float)
        self.loss_db = np.asarray(self.loss_db, dtype=float)

    def validate(self):
        """Returns a list of invariant violations; empty means valid."""
        m = self.topology.n_mzis
        problems = list(self.topology.validate())
        for name, arr, shape in [
            ("phi0", self.phi0, (m,)),
            ("phi2", self.phi2, (m,)),
            ("phi4", self.phi4, (m,)),
            ("xt", self.xt, (m, m)),
            ("loss_db", self.loss_db, self.topology.weight_shape),
        ]:
            if arr.shape != shape:
                problems.append(f"{name} has shape {arr.shape}, expected {shape}")
        if problems:
            return problems
        if np.any(self.phi2 <= 0):
            problems.append("phi2 must be positive")
        if self.er_db <= 0:
            problems.append("er_db must be positive")
        if self.noise_sigma_db < 0:
            problems.append("noise_sigma_db must be non-negative")
        if np.any(np.diag(self.xt) != 0):
            problems.append("xt must have a zero diagonal")
        if np.any(np.abs(self.xt) >= self.phi2[:, None]):
            problems.append("crosstalk must be weaker than self-heating")
        if np.any(self.loss_db > 0):
            problems.append("loss_db entries must be <= 0 dB")
        if not self.v_min < self.v_max:
            problems.append("voltage range is empty")
        return problems

    def to_dict(self) -> dict:
        return {
            "topology": self.topology.to_dict(),
            "phi0": self.phi0.tolist(),
            "phi2": self.phi2.tolist(),
            "xt": self.xt.tolist(),
            "phi4": self.phi4.tolist(),
            "er_db": self.er_db,
            "loss_db": self.loss_db.tolist(),
            "noise_sigma_db": self.noise_sigma_db,
            "seed": self.seed,
            "v_min": self.v_min,
            "v_max": self.v_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VirtualChipParams":
        return cls(
            topology=MeshTopology.from_dict(d["topology"]),
            phi0=np.array(d["phi0"]),
            phi2=np.array(d["phi2"]),
            xt=np.array(d["xt"]),
            phi4=np.array(d["phi4"]),
            er_db=d["er_db"],
            loss_db=np.array(d["loss_db"]),
            noise_sigma_db=d["noise_sigma_db"],
            seed=d["seed"],
            v_min=d.get("v_min", DEFAULT_V_MIN),
            v_max=d.get("v_max", DEFAULT_V_MAX),
        )

    def content_hash(self) -> str:
        return sha256_of_obj(self.to_dict())

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "VirtualChipParams":
        return cls.from_dict(read_json(path))

    @classmethod
    def default(cls, topology: MeshTopology | None = None, seed: int = 7,
                xt_scale: float = 1.0, quartic_scale: float = 1.0,
                noise_sigma_db: float = 0.05) -> "VirtualChipParams":
        """Default ground truth: near-neighbour crosstalk, 4% quartic error.

        ``phi2 = pi/4`` puts the half-period at the 2 V full scale;
        crosstalk decays exponentially with MZI index distance at 5% of
        the self-heating coefficient.  ``xt_scale`` / ``quartic_scale``
        scale those imperfections (0 turns them off).
        """
        topology = topology or default_topology()
        m = topology.n_mzis
        rng = np.random.default_rng(seed)
        phi0 = rng.uniform(0.0, 2.0 * math.pi, size=m)
        phi2 = np.full(m, math.pi / 4.0)
        k = np.arange(m)
        xt = 0.05 * phi2[:, None] * np.exp(-np.abs(k[:, None] - k[None, :]))
        np.fill_diagonal(xt, 0.0)
        xt *= xt_scale
        phi4 = 0.01 * phi2 * quartic_scale
        loss_db = rng.uniform(-6.0, -3.0, size=topology.weight_shape)
        return cls(
            topology=topology,
            phi0=phi0,
            phi2=phi2,
            xt=xt,
            phi4=phi4,
            er_db=25.0,
            loss_db=loss_db,
            noise_sigma_db=noise_sigma_db,
            seed=seed,
        )


class VirtualChip:
    """Simulated measurement access to a chip with the given ground truth.

    Noise-free measurement is a pure function of (params, voltages).
    Noisy measurement draws from one generator seeded at construction, so
    a fixed sequence of measurements is reproducible per chip instance.
    """

    def __init__(self, params: VirtualChipParams):
        problems = params.validate()
        if problems:
            raise ValueError("invalid chip parameters: " + "; ".join(problems))
        self.params = params
        self.topology = params.topology
        self._rng = np.random.default_rng(params.seed)
        # phi = phi0 + A @ v^2 + phi4 * v^4 with A = diag(phi2) + xt
        self._coupling = np.diag(params.phi2) + params.xt
        self._r = residual_amplitude(params.er_db)

    def phases(self, v: np.ndarray) -> np.ndarray:
        """Ground-truth phase of every MZI at voltage vector ``v``."""
        v = check_voltages(v, self.topology.n_mzis, self.params.v_min,
                           self.params.v_max)
        v2 = v * v
        return self.params.phi0 + self._coupling @ v2 + self.params.phi4 * v2 * v2

    def _weights_from_phases(self, phi: np.ndarray) -> np.ndarray:
        """Noise-free weights in dB for phases of shape (..., M)."""
        shape = phi.shape[:-1] + self.topology.weight_shape
        w = np.empty(shape)
        for (i, j) in self.topology.entries():
            idx, signs = self.topology.path_arrays(i, j)
            factors = element_factor(phi[..., idx], signs, self._r)
            w[..., j - 1, i - 1] = (
                self.params.loss_db[j - 1, i - 1]
                + np.sum(10.0 * np.log10(factors), axis=-1)
            )
        return np.maximum(w, DB_FLOOR_DB)

    def measure(self, v, noise: bool = True) -> np.ndarray:
        """Measure the weight matrix at ``v``; returns (n_outputs, n_inputs) dB."""
        w = self._weights_from_phases(self.phases(v))
        if noise and self.params.noise_sigma_db > 0:
            w = w + self._rng.normal(0.0, self.params.noise_sigma_db, size=w.shape)
        return w

    def measure_batch(self, voltages: np.ndarray, noise: bool = True) -> np.ndarray:
        """Measure many voltage vectors; equivalent to sequential measures."""
        voltages = np.asarray(voltages, dtype=float)
        phi = np.stack([self.phases(v) for v in voltages])
        w = self._weights_from_phases(phi)
        if noise and self.params.noise_sigma_db > 0:
            w = w + self._rng.normal(0.0, self.params.noise_sigma_db, size=w.shape)
        return w

    # -- dataset generation ----------------------------------------------

    def _meta(self, mode: str, **kw) -> DatasetMeta:
        return DatasetMeta(
            mode=mode,
            chip_seed=self.params.seed,
            v_min=self.params.v_min,
            v_max=self.params.v_max,
            chip_config_hash=self.params.content_hash(),
            topology_hash=self.topology.content_hash(),
            **kw,
        )

    def sweep_dataset(self, mzi_index: int, n_points: int = 51,
                      rest: np.ndarray | None = None) -> Dataset:
        """Sweep one MZI's voltage over the full range, others held at ``rest``."""
        m = self.topology.n_mzis
        if not 1 <= mzi_index <= m:
            raise ValueError(f"mzi_index {mzi_index} outside [1, {m}]")
        if n_points < 2:
            raise ValueError("a sweep needs at least 2 points")
        if rest is None:
            rest = np.full(m, self.params.v_min)
        rest = check_voltages(rest, m, self.params.v_min, self.params.v_max)
        voltages = np.tile(rest, (n_points, 1))
        voltages[:, mzi_index - 1] = np.linspace(self.params.v_min,
                                                 self.params.v_max, n_points)
        weights = self.measure_batch(voltages)
        return Dataset(voltages, weights, self._meta("sweep", sweep_mzi=mzi_index))

    def random_dataset(self, n_samples: int = 5100, seed: int = 0) -> Dataset:
        """Sample voltages i.i.d. uniform over the range and measure each."""
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        rng = np.random.default_rng(seed)
        voltages = rng.uniform(self.params.v_min, self.params.v_max,
                               size=(n_samples, self.topology.n_mzis))
        weights = self.measure_batch(voltages)
        return Dataset(voltages, weights, self._meta("random", dataset_seed=seed))
