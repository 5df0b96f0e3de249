"""Datasets of (voltage vector, measured weight matrix) pairs.

Datasets are stored as JSON-lines files, one record per sample:

    {"v": [<M volts>], "w_db": [[<n_outputs x n_inputs dB>]]}

with a sidecar ``<name>.meta.json`` recording how the data was produced
(generation mode, seeds, voltage range, and the hashes of the chip config
and topology it came from).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .jsonio import read_json, write_json


@dataclass
class DatasetMeta:
    """Provenance for one dataset file."""

    mode: str  # "sweep" or "random"
    chip_seed: int
    v_min: float
    v_max: float
    chip_config_hash: str = ""
    topology_hash: str = ""
    dataset_seed: int | None = None
    sweep_mzi: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "chip_seed": self.chip_seed,
            "v_min": self.v_min,
            "v_max": self.v_max,
            "chip_config_hash": self.chip_config_hash,
            "topology_hash": self.topology_hash,
            "dataset_seed": self.dataset_seed,
            "sweep_mzi": self.sweep_mzi,
        }
        if self.extra:
            d["extra"] = self.extra
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetMeta":
        return cls(
            mode=d["mode"],
            chip_seed=d["chip_seed"],
            v_min=d["v_min"],
            v_max=d["v_max"],
            chip_config_hash=d.get("chip_config_hash", ""),
            topology_hash=d.get("topology_hash", ""),
            dataset_seed=d.get("dataset_seed"),
            sweep_mzi=d.get("sweep_mzi"),
            extra=d.get("extra", {}),
        )


@dataclass(frozen=True)
class Sample:
    """One measurement: applied voltages and the resulting weights in dB."""

    voltages: np.ndarray  # (M,)
    weights_db: np.ndarray  # (n_outputs, n_inputs)


@dataclass
class Dataset:
    """A batch of samples, stored as arrays for vectorized model evaluation.

    ``voltages`` has shape (n, M); ``weights_db`` has shape
    (n, n_outputs, n_inputs).
    """

    voltages: np.ndarray
    weights_db: np.ndarray
    meta: DatasetMeta

    def __post_init__(self):
        self.voltages = np.asarray(self.voltages, dtype=float)
        self.weights_db = np.asarray(self.weights_db, dtype=float)
        if self.voltages.ndim != 2 or self.weights_db.ndim != 3:
            raise ValueError("voltages must be (n, M), weights (n, n_out, n_in)")
        if len(self.voltages) != len(self.weights_db):
            raise ValueError("voltages and weights have different sample counts")

    def __len__(self) -> int:
        return len(self.voltages)

    def __getitem__(self, idx: int) -> Sample:
        return Sample(self.voltages[idx], self.weights_db[idx])

    @property
    def samples(self):
        return [self[i] for i in range(len(self))]

    @property
    def n_mzis(self) -> int:
        return self.voltages.shape[1]

    @property
    def weight_shape(self):
        return self.weights_db.shape[1:]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.voltages[idx], self.weights_db[idx], self.meta)

    @classmethod
    def concat(cls, parts) -> "Dataset":
        parts = list(parts)
        if not parts:
            raise ValueError("cannot concatenate zero datasets")
        v = np.concatenate([p.voltages for p in parts], axis=0)
        w = np.concatenate([p.weights_db for p in parts], axis=0)
        return cls(v, w, parts[0].meta)

    # -- file format ----------------------------------------------------

    def save(self, path) -> None:
        path = Path(path)
        lines = []
        for n in range(len(self)):
            record = {
                "v": self.voltages[n].tolist(),
                "w_db": self.weights_db[n].tolist(),
            }
            lines.append(json.dumps(record, separators=(",", ":")))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        write_json(meta_path(path), self.meta.to_dict())

    @classmethod
    def load(cls, path) -> "Dataset":
        path = Path(path)
        voltages, weights = [], []
        with path.open(encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                voltages.append(record["v"])
                weights.append(record["w_db"])
        mp = meta_path(path)
        if mp.exists():
            meta = DatasetMeta.from_dict(read_json(mp))
        else:
            meta = DatasetMeta(mode="unknown", chip_seed=-1, v_min=0.0, v_max=0.0)
        return cls(np.array(voltages), np.array(weights), meta)


def meta_path(dataset_path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.stem + ".meta.json")
