"""Core domain types and unit math for MZI-mesh power-weight matrices.

A mesh maps an input power vector to an output power vector through a
matrix of power transmissions, ``p_out = W @ p_in``.  Weights are handled
in dB throughout the package; this module owns the dB/linear conversions,
the mesh topology description (which MZIs sit on the path from input i to
output j, and through which port), and the floor that keeps deep nulls
finite in the log domain.

Index conventions, used everywhere:
  * paths are keyed ``(i, j)`` with ``i`` the 1-based input and ``j`` the
    1-based output;
  * weight matrices are arrays of shape ``(n_outputs, n_inputs)`` indexed
    ``[j - 1, i - 1]``, so that ``p_out = W @ p_in``.
"""

from dataclasses import dataclass, field

import numpy as np

from .jsonio import read_json, sha256_of_obj, write_json

# Linear power weights below this are clamped before converting to dB, so
# measurement noise and deep interference nulls never produce -inf.
DB_FLOOR_LINEAR = 1e-9
DB_FLOOR_DB = -90.0

PORT_CROSS = "cross"
PORT_BAR = "bar"

# Voltage range of the heater drivers; 2 V sweeps one half-period.
DEFAULT_V_MIN = 0.0
DEFAULT_V_MAX = 2.0


def db_to_linear(x_db):
    """Convert dB to a linear power ratio, ``10**(x_db / 10)``.

    Accepts scalars or arrays.  Raises ``ValueError`` on non-finite input.
    """
    x = np.asarray(x_db, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("db_to_linear requires finite input")
    out = 10.0 ** (x / 10.0)
    return float(out) if np.isscalar(x_db) else out


def linear_to_db(x):
    """Convert a linear power ratio to dB, ``10 * log10(x)``.

    Raises ``ValueError`` for inputs <= 0; callers with possibly-zero
    weights should clamp with :func:`floor_linear` first.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("linear_to_db requires positive finite input")
    out = 10.0 * np.log10(arr)
    return float(out) if np.isscalar(x) else out


def floor_linear(x):
    """Clamp linear power weights to the -90 dB floor."""
    return np.maximum(x, DB_FLOOR_LINEAR)


def residual_amplitude(er_db):
    """Residual field amplitude of an MZI with finite extinction ratio.

    ``r = (sqrt(ER) - 1) / (sqrt(ER) + 1)`` with ER the linear extinction
    ratio.  It bounds each port's transmission factor to
    ``[0.25 * (1 - r)**2, 0.25 * (1 + r)**2]``, and the ratio of those
    extrema is exactly ER.
    """
    sqrt_er = np.sqrt(10.0 ** (np.asarray(er_db, dtype=float) / 10.0))
    return (sqrt_er - 1.0) / (sqrt_er + 1.0)


def element_factor(phi, sign, r):
    """Power transmission factor of one MZI port at phase ``phi``.

    ``sign`` is -1 for the cross port and +1 for the bar port; the two
    ports are energy complements of the same interferometer.  Computed as
    the real expansion ``0.25 * (r**2 + 1 + sign * 2 * r * cos(phi))``.
    """
    return 0.25 * (r * r + 1.0 + sign * 2.0 * r * np.cos(phi))


@dataclass(frozen=True)
class PathElement:
    """One MZI on a light path, seen through one of its two output ports.

    The cross port contributes the interference factor whose transmission
    is minimal at zero phase; the bar port contributes the energy
    complement (maximal at zero phase).
    """

    mzi: int
    port: str = PORT_CROSS

    def sign(self) -> float:
        """Sign of the cosine term in the port's transmission factor."""
        return -1.0 if self.port == PORT_CROSS else 1.0


@dataclass(frozen=True)
class MeshTopology:
    """Which MZIs affect which weight of the mesh.

    ``paths[(i, j)]`` lists the MZIs traversed from input ``i`` to output
    ``j`` in order, each with the port through which that path exits.
    """

    n_inputs: int
    n_outputs: int
    n_mzis: int
    paths: dict = field(default_factory=dict)

    def __post_init__(self):
        # Freeze path lists so topologies are safe to share across models.
        frozen = {key: tuple(elems) for key, elems in self.paths.items()}
        object.__setattr__(self, "paths", frozen)
        object.__setattr__(self, "_path_cache", {})

    @property
    def weight_shape(self):
        return (self.n_outputs, self.n_inputs)

    def entries(self):
        """Weight entries in canonical row-major order (by output, then input)."""
        return [(i, j) for j in range(1, self.n_outputs + 1)
                for i in range(1, self.n_inputs + 1)]

    def path(self, i: int, j: int):
        return self.paths[(i, j)]

    def path_arrays(self, i: int, j: int):
        """0-based MZI indices and cosine signs for path ``(i, j)``."""
        return _path_arrays(self, i, j)

    def validate(self):
        return validate_topology(self)

    def to_dict(self) -> dict:
        return {
            "n_inputs": self.n_inputs,
            "n_outputs": self.n_outputs,
            "n_mzis": self.n_mzis,
            "paths": [
                {
                    "i": i,
                    "j": j,
                    "elements": [{"mzi": e.mzi, "port": e.port} for e in elems],
                }
                for (i, j), elems in sorted(self.paths.items())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MeshTopology":
        paths = {
            (p["i"], p["j"]): tuple(
                PathElement(mzi=e["mzi"], port=e["port"]) for e in p["elements"]
            )
            for p in d["paths"]
        }
        return cls(
            n_inputs=d["n_inputs"],
            n_outputs=d["n_outputs"],
            n_mzis=d["n_mzis"],
            paths=paths,
        )

    def content_hash(self) -> str:
        return sha256_of_obj(self.to_dict())

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "MeshTopology":
        return cls.from_dict(read_json(path))


def _path_arrays(topology: MeshTopology, i: int, j: int):
    cache = topology._path_cache
    hit = cache.get((i, j))
    if hit is None:
        elems = topology.paths[(i, j)]
        idx = np.array([e.mzi - 1 for e in elems], dtype=int)
        signs = np.array([e.sign() for e in elems], dtype=float)
        hit = (idx, signs)
        cache[(i, j)] = hit
    return hit


def validate_topology(t: MeshTopology):
    """Check topology invariants; returns a list of violation messages.

    An empty list means the topology is valid.
    """
    problems = []
    for i in range(1, t.n_inputs + 1):
        for j in range(1, t.n_outputs + 1):
            elems = t.paths.get((i, j))
            if not elems:
                problems.append(f"path ({i},{j}) is missing or empty")
                continue
            seen = set()
            for e in elems:
                if not (1 <= e.mzi <= t.n_mzis):
                    problems.append(
                        f"path ({i},{j}) references MZI {e.mzi} outside [1, {t.n_mzis}]"
                    )
                if e.port not in (PORT_CROSS, PORT_BAR):
                    problems.append(f"path ({i},{j}) has unknown port {e.port!r}")
                if e.mzi in seen:
                    problems.append(f"path ({i},{j}) repeats MZI {e.mzi}")
                seen.add(e.mzi)
    for key in t.paths:
        i, j = key
        if not (1 <= i <= t.n_inputs and 1 <= j <= t.n_outputs):
            problems.append(f"path key ({i},{j}) outside the mesh dimensions")
    return problems


def check_voltages(v, n_mzis: int, v_min: float = DEFAULT_V_MIN,
                   v_max: float = DEFAULT_V_MAX) -> np.ndarray:
    """Validate and return a heater voltage vector as a float array."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (n_mzis,):
        raise ValueError(f"expected {n_mzis} voltages, got shape {arr.shape}")
    if np.any(arr < v_min - 1e-12) or np.any(arr > v_max + 1e-12):
        raise ValueError(f"voltages outside [{v_min}, {v_max}] V")
    return arr


def default_topology() -> MeshTopology:
    """The 3x3, five-MZI mesh topology shipped with the package.

    Representative of a small programmable mesh; any valid topology file
    can replace it on the command line.
    """
    import json
    from importlib import resources

    with resources.files("mzimesh").joinpath("default_topology.json").open() as f:
        return MeshTopology.from_dict(json.load(f))


def apply_weights(w_db: np.ndarray, p_in) -> np.ndarray:
    """Apply a dB weight matrix to a linear input power vector.

    ``p_out[j] = sum_i 10**(w_db[j, i] / 10) * p_in[i]``.  Entries of
    ``-inf`` dB are treated as exactly zero transmission, so identity-like
    matrices can be expressed without a finite floor.
    """
    w = np.asarray(w_db, dtype=float)
    p = np.asarray(p_in, dtype=float)
    if w.ndim != 2 or p.shape != (w.shape[1],):
        raise ValueError(f"shape mismatch: weights {w.shape}, input {p.shape}")
    if np.any(p < 0):
        raise ValueError("input powers must be non-negative")
    w_lin = np.where(np.isneginf(w), 0.0, 10.0 ** (w / 10.0))
    if not np.all(np.isfinite(w_lin)):
        raise ValueError("weight matrix has non-finite entries")
    return w_lin @ p
