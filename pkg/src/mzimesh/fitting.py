"""Training of the three voltage-to-weight models.

All models minimize the same cost: the root-mean-square error between
predicted and measured weights in dB.  The two physics models use the
bounded quasi-Newton minimizer of :mod:`mzimesh.optimize` (internally on
the equivalent half-mean-squared-error objective, which is smooth at zero
residual); the surrogate network trains full-batch with backprop
gradients and keeps the parameters seen at the best validation RMSE.

Fit drivers:

* :func:`fit_local_model` - per-MZI sweeps fix the phase laws and the
  extinction ratio, then path losses are fitted in closed form on the
  random dataset with phases held fixed.
* :func:`fit_crosstalk_model` - independent bounded fits per weight
  entry, seeded from a diagonal-coupling prefit with multi-start over
  phase offsets.
* :func:`train_surrogate` - architecture search over hidden layouts,
  each trained by L-BFGS with periodic validation snapshots.
"""

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import DB_FLOOR_DB, MeshTopology
from .data import Dataset
from .models import (
    CrosstalkPhaseModel,
    FeatureNormalizer,
    LocalPhaseModel,
    NeuralSurrogateModel,
    factor_db_and_partials,
    residual_amplitude,
    residual_amplitude_grad,
)
from .optimize import OptimizerConfig, lbfgs_minimize

TWO_PI = 2.0 * math.pi

# Box bounds for the physics-model fits.  Phases are periodic; the box
# blocks aliasing across more than one period.
PHASE_OFFSET_BOUNDS = (-TWO_PI, 2 * TWO_PI)
PHASE_SELF_BOUNDS = (0.0, 2.0)  # rad/V^2
PHASE_CROSS_BOUNDS = (-0.5, 0.5)  # rad/V^2
ER_BOUNDS = (10.0, 40.0)  # dB
LOSS_BOUNDS = (-20.0, 0.0)  # dB
SWEEP_OFFSET_BOUNDS = (-90.0, 0.0)  # dB, absorbs loss + off-sweep factors

# Multi-start grid for phase offsets (cosine periodicity creates local
# minima); ties break on iteration count, then start index.
PHASE_STARTS = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)

ER_INIT = 20.0
PHI2_INIT = math.pi / 4.0  # half-period at full scale, the design prior

# Cap on enumerated phase-start combinations per weight entry.
MAX_START_COMBOS = 4096


@dataclass
class SplitSpec:
    """Train/validation/test partition sizes plus the shuffle seed.

    Validation is carved out of the training block, so the effective
    training set has ``n_train - n_val`` samples.
    """

    n_train: int = 4400
    n_val: int = 700
    n_test: int = 700
    seed: int = 0

    def to_dict(self) -> dict:
        return {"n_train": self.n_train, "n_val": self.n_val,
                "n_test": self.n_test, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitSpec":
        return cls(**d)


def split_dataset(dataset: Dataset, spec: SplitSpec):
    """Deterministic shuffled partition into (train, validation, test)."""
    n = len(dataset)
    if spec.n_train + spec.n_test > n:
        raise ValueError(
            f"split needs {spec.n_train + spec.n_test} samples, dataset has {n}")
    if spec.n_val > spec.n_train:
        raise ValueError("n_val cannot exceed n_train")
    perm = np.random.default_rng(spec.seed).permutation(n)
    pool = perm[:spec.n_train]
    n_eff = spec.n_train - spec.n_val
    train = dataset.subset(pool[:n_eff])
    val = dataset.subset(pool[n_eff:])
    test = dataset.subset(perm[spec.n_train:spec.n_train + spec.n_test])
    return train, val, test


@dataclass
class FitReport:
    """Outcome of one model fit."""

    model_kind: str
    train_rmse_db: float
    test_rmse_db: float | None = None
    val_rmse_db: float | None = None
    n_iterations: int = 0
    wall_time_s: float = 0.0
    converged: bool = True
    hyperparameters: dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "model_kind": self.model_kind,
            "train_rmse_db": self.train_rmse_db,
            "test_rmse_db": self.test_rmse_db,
            "val_rmse_db": self.val_rmse_db,
            "n_iterations": self.n_iterations,
            "converged": self.converged,
            "hyperparameters": self.hyperparameters,
        }
        # Wall time is diagnostics; keeping it out of result files keeps
        # reruns byte-identical.
        if include_timing:
            d["wall_time_s"] = self.wall_time_s
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        return cls(
            model_kind=d["model_kind"],
            train_rmse_db=d["train_rmse_db"],
            test_rmse_db=d.get("test_rmse_db"),
            val_rmse_db=d.get("val_rmse_db"),
            n_iterations=d.get("n_iterations", 0),
            wall_time_s=d.get("wall_time_s", 0.0),
            converged=d.get("converged", True),
            hyperparameters=d.get("hyperparameters", {}),
        )


def rmse_db(model, dataset: Dataset) -> float:
    """RMSE in dB between model predictions and measured weights."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    err = model.forward_batch(dataset.voltages) - dataset.weights_db
    return float(np.sqrt(np.mean(err * err)))


def rmse_objective(model, dataset: Dataset):
    """RMSE cost and its gradient w.r.t. the model's parameter vector."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    return model.rmse_and_grad(dataset.voltages, dataset.weights_db)


def _half_mse_objective(model, dataset: Dataset):
    """Smooth surrogate objective: value 0.5 * rmse**2, same minimizers."""

    def fun(vec):
        rmse, grad = model.with_params(vec).rmse_and_grad(
            dataset.voltages, dataset.weights_db)
        return 0.5 * rmse * rmse, rmse * grad

    return fun


def _pick_best(candidates):
    """Deterministic winner: objective, then iterations, then start index."""
    return min(candidates, key=lambda c: (c[0], c[1], c[2]))


# ---------------------------------------------------------------------------
# Local physics model (m1)
# ---------------------------------------------------------------------------


def _sweep_stage_objective(vk2, signs, measured):
    """Objective factory for one sweep fit.

    Parameters: ``[phi0_k, phi2_k, er_db, offset per affected weight]``
    where each offset absorbs the path loss and the factors of the MZIs
    held at rest.  Returns half-MSE over sweep samples x affected weights.
    """
    n, n_aff = measured.shape

    def fun(x):
        phi0, phi2, er = x[0], x[1], x[2]
        offsets = x[3:]
        r = residual_amplitude(er)
        dr = residual_amplitude_grad(er)
        phi = phi0 + phi2 * vk2
        f_db, d_phi, d_r = factor_db_and_partials(phi[:, None], signs[None, :], r)
        pred = offsets[None, :] + f_db
        clamped = pred < DB_FLOOR_DB
        pred = np.where(clamped, DB_FLOOR_DB, pred)
        d_phi = np.where(clamped, 0.0, d_phi)
        d_r = np.where(clamped, 0.0, d_r)
        e = pred - measured
        n_tot = e.size
        val = 0.5 * float(np.sum(e * e)) / n_tot
        g = np.empty_like(x)
        ed = e * d_phi
        g[0] = ed.sum() / n_tot
        g[1] = float(ed.sum(axis=1) @ vk2) / n_tot
        g[2] = float(np.sum(e * d_r)) * dr / n_tot
        g[3:] = e.sum(axis=0) / n_tot
        return val, g

    return fun


def fit_local_model(topology: MeshTopology, sweeps, train: Dataset,
                    cfg: OptimizerConfig | None = None,
                    test: Dataset | None = None):
    """Fit the per-MZI phase model from one sweep per MZI plus random data.

    Stage 1 estimates each MZI's phase offset, quadratic coefficient and
    the extinction ratio from its own sweep (multi-start over the phase
    offset).  Stage 2 fits the per-path losses on the random training
    data in closed form, phases held fixed.

    Returns ``(LocalPhaseModel, FitReport)``.
    """
    cfg = cfg or OptimizerConfig(max_iter=400)
    t0 = time.perf_counter()
    m = topology.n_mzis
    by_mzi = {}
    for ds in sweeps:
        if ds.meta.sweep_mzi is not None:
            by_mzi[ds.meta.sweep_mzi] = ds
    missing = [k for k in range(1, m + 1) if k not in by_mzi]
    if missing:
        raise ValueError(f"missing sweep datasets for MZIs {missing}")

    phi0 = np.zeros(m)
    phi2 = np.zeros(m)
    er_estimates = np.zeros(m)
    total_iters = 0
    converged = True

    for k in range(1, m + 1):
        ds = by_mzi[k]
        vk2 = ds.voltages[:, k - 1] ** 2
        affected = [(i, j) for (i, j) in topology.entries()
                    if any(e.mzi == k for e in topology.path(i, j))]
        signs = np.array([
            next(e.sign() for e in topology.path(i, j) if e.mzi == k)
            for (i, j) in affected
        ])
        measured = np.stack(
            [ds.weights_db[:, j - 1, i - 1] for (i, j) in affected], axis=1)
        fun = _sweep_stage_objective(vk2, signs, measured)

        lo = np.concatenate([[PHASE_OFFSET_BOUNDS[0], PHASE_SELF_BOUNDS[0],
                              ER_BOUNDS[0]],
                             np.full(len(affected), SWEEP_OFFSET_BOUNDS[0])])
        hi = np.concatenate([[PHASE_OFFSET_BOUNDS[1], PHASE_SELF_BOUNDS[1],
                              ER_BOUNDS[1]],
                             np.full(len(affected), SWEEP_OFFSET_BOUNDS[1])])

        candidates = []
        for s_idx, p0 in enumerate(PHASE_STARTS):
            x0 = np.empty(3 + len(affected))
            x0[0], x0[1], x0[2] = p0, PHI2_INIT, ER_INIT
            r0 = residual_amplitude(ER_INIT)
            f_db0 = 10.0 * np.log10(
                0.25 * (r0 * r0 + 1.0
                        + signs[None, :] * 2.0 * r0
                        * np.cos(p0 + PHI2_INIT * vk2)[:, None]))
            x0[3:] = measured.mean(axis=0) - f_db0.mean(axis=0)
            res = lbfgs_minimize(fun, x0, cfg, bounds=(lo, hi))
            candidates.append((res.f, res.n_iter, s_idx, res))
        _, _, _, best = _pick_best(candidates)
        total_iters += best.n_iter
        converged = converged and best.converged
        phi0[k - 1] = best.x[0] % TWO_PI
        phi2[k - 1] = best.x[1]
        er_estimates[k - 1] = best.x[2]

    er_db = float(er_estimates.mean())

    # Stage 2: with phases fixed, the dB loss enters additively, so the
    # least-squares loss per weight is the mean residual (clipped to box).
    model = LocalPhaseModel(topology=topology, er_db=er_db,
                            loss_db=np.zeros(topology.weight_shape),
                            phi0=phi0, phi2=phi2)
    zero_loss_pred = model.forward_batch(train.voltages)
    residual = train.weights_db - zero_loss_pred
    loss_db = np.clip(residual.mean(axis=0), *LOSS_BOUNDS)
    model.loss_db = loss_db

    report = FitReport(
        model_kind="m1",
        train_rmse_db=rmse_db(model, train),
        test_rmse_db=rmse_db(model, test) if test is not None else None,
        n_iterations=total_iters,
        wall_time_s=time.perf_counter() - t0,
        converged=converged,
        hyperparameters={
            "phase_starts": len(PHASE_STARTS),
            "optimizer": cfg.to_dict(),
        },
    )
    return model, report


# ---------------------------------------------------------------------------
# Crosstalk physics model (m2)
# ---------------------------------------------------------------------------


def _entry_objective(v2, signs, measured, diagonal_idx=None):
    """Half-MSE objective for one weight entry of the crosstalk model.

    Full parameterization ``[phi0 (|K|), phi2 (|K| x M), er_db, loss]``;
    with ``diagonal_idx`` given, phi2 is restricted to one self-coupling
    per path MZI: ``[phi0 (|K|), phi2_self (|K|), er_db, loss]``.
    """
    n, n_mzis = v2.shape
    n_k = len(signs)

    def unpack(x):
        phi0 = x[:n_k]
        if diagonal_idx is None:
            p2 = x[n_k:n_k + n_k * n_mzis].reshape(n_k, n_mzis)
            er, loss = x[-2], x[-1]
        else:
            p2 = np.zeros((n_k, n_mzis))
            p2[np.arange(n_k), diagonal_idx] = x[n_k:2 * n_k]
            er, loss = x[-2], x[-1]
        return phi0, p2, er, loss

    def fun(x):
        phi0, p2, er, loss = unpack(x)
        r = residual_amplitude(er)
        dr = residual_amplitude_grad(er)
        phi = phi0[None, :] + v2 @ p2.T
        f_db, d_phi, d_r = factor_db_and_partials(phi, signs[None, :], r)
        pred = loss + f_db.sum(axis=1)
        clamped = pred < DB_FLOOR_DB
        pred = np.where(clamped, DB_FLOOR_DB, pred)
        d_phi = np.where(clamped[:, None], 0.0, d_phi)
        d_r = np.where(clamped[:, None], 0.0, d_r)
        e = pred - measured
        val = 0.5 * float(e @ e) / n
        g_phi0 = (e @ d_phi) / n
        if diagonal_idx is None:
            g_p2 = ((d_phi * e[:, None]).T @ v2) / n
            g_mid = g_p2.ravel()
        else:
            g_mid = (e @ (d_phi * v2[:, diagonal_idx])) / n
            g_mid = np.atleast_1d(g_mid)
        g_er = float(e @ d_r.sum(axis=1)) * dr / n
        g_loss = e.sum() / n
        return val, np.concatenate([g_phi0, g_mid, [g_er], [g_loss]])

    return fun


def _phase_start_combos(n_k: int, seed: int):
    """Phase-offset start combinations, capped for deep paths."""
    total = len(PHASE_STARTS) ** n_k
    combos = list(itertools.product(PHASE_STARTS, repeat=n_k))
    if total > MAX_START_COMBOS:
        rng = np.random.default_rng(seed)
        keep = rng.choice(total, size=MAX_START_COMBOS, replace=False)
        combos = [combos[idx] for idx in sorted(keep)]
    return combos


def fit_crosstalk_model(topology: MeshTopology, train: Dataset,
                        cfg: OptimizerConfig | None = None,
                        test: Dataset | None = None,
                        x0_model: CrosstalkPhaseModel | None = None):
    """Fit the all-voltage phase model, independently per weight entry.

    Per entry: a diagonal prefit (self-couplings only, multi-start over
    the phase-offset grid, screened on a subsample) provides the
    initialization; the full fit then opens the cross couplings.  With
    ``x0_model`` given, the prefit and screening are skipped and the fit
    starts from that model's parameters instead.

    Returns ``(CrosstalkPhaseModel, FitReport)``.
    """
    cfg = cfg or OptimizerConfig(max_iter=800)
    t0 = time.perf_counter()
    if len(train) == 0:
        raise ValueError("empty training set")
    m = topology.n_mzis
    v2 = train.voltages ** 2
    n_screen = min(len(train), 512)

    phi0_out, phi2_out = {}, {}
    n_out, n_in = topology.weight_shape
    er_out = np.zeros((n_out, n_in))
    loss_out = np.zeros((n_out, n_in))
    total_iters = 0
    converged = True

    for (i, j) in topology.entries():
        idx, signs = topology.path_arrays(i, j)
        n_k = len(idx)
        w = train.weights_db[:, j - 1, i - 1]
        full_fun = _entry_objective(v2, signs, w)

        full_lo = np.concatenate([
            np.full(n_k, PHASE_OFFSET_BOUNDS[0]),
            np.full(n_k * m, PHASE_CROSS_BOUNDS[0]),
            [ER_BOUNDS[0], LOSS_BOUNDS[0]],
        ])
        full_hi = np.concatenate([
            np.full(n_k, PHASE_OFFSET_BOUNDS[1]),
            np.full(n_k * m, PHASE_CROSS_BOUNDS[1]),
            [ER_BOUNDS[1], LOSS_BOUNDS[1]],
        ])
        # self-couplings live on the wider non-negative box
        for row, col in enumerate(idx):
            full_lo[n_k + row * m + col] = PHASE_SELF_BOUNDS[0]
            full_hi[n_k + row * m + col] = PHASE_SELF_BOUNDS[1]

        if x0_model is not None:
            x_init = x0_model.entry_param_vector(i, j)
            x_init = np.clip(x_init, full_lo, full_hi)
            res = lbfgs_minimize(full_fun, x_init, cfg,
                                 bounds=(full_lo, full_hi))
            total_iters += res.n_iter
        else:
            # Diagonal prefit: screen phase-start combos on a subsample.
            diag_fun = _entry_objective(v2, signs, w, diagonal_idx=idx)
            screen_fun = _entry_objective(v2[:n_screen], signs, w[:n_screen],
                                          diagonal_idx=idx)
            diag_lo = np.concatenate([
                np.full(n_k, PHASE_OFFSET_BOUNDS[0]),
                np.full(n_k, PHASE_SELF_BOUNDS[0]),
                [ER_BOUNDS[0], LOSS_BOUNDS[0]],
            ])
            diag_hi = np.concatenate([
                np.full(n_k, PHASE_OFFSET_BOUNDS[1]),
                np.full(n_k, PHASE_SELF_BOUNDS[1]),
                [ER_BOUNDS[1], LOSS_BOUNDS[1]],
            ])
            scored = []
            for c_idx, combo in enumerate(_phase_start_combos(n_k, cfg.seed)):
                x0 = np.concatenate([combo, np.full(n_k, PHI2_INIT),
                                     [ER_INIT, 0.0]])
                x0[-1] = float(np.clip(
                    w[:n_screen].mean()
                    - _mean_factor_db(v2[:n_screen], signs, combo, idx),
                    *LOSS_BOUNDS))
                scored.append((screen_fun(x0)[0], c_idx, x0))
            scored.sort(key=lambda s: (s[0], s[1]))
            candidates = []
            for rank, (_, c_idx, x0) in enumerate(scored[:len(PHASE_STARTS)]):
                res = lbfgs_minimize(diag_fun, x0, cfg,
                                     bounds=(diag_lo, diag_hi))
                candidates.append((res.f, res.n_iter, rank, res))
            _, _, _, best_diag = _pick_best(candidates)
            total_iters += best_diag.n_iter

            x_init = np.zeros(n_k + n_k * m + 2)
            x_init[:n_k] = best_diag.x[:n_k]
            for row, col in enumerate(idx):
                x_init[n_k + row * m + col] = best_diag.x[n_k + row]
            x_init[-2:] = best_diag.x[-2:]
            res = lbfgs_minimize(full_fun, x_init, cfg,
                                 bounds=(full_lo, full_hi))
            total_iters += res.n_iter

        converged = converged and res.converged
        x = res.x
        phi0_out[(i, j)] = x[:n_k] % TWO_PI
        phi2_out[(i, j)] = x[n_k:n_k + n_k * m].reshape(n_k, m)
        er_out[j - 1, i - 1] = x[-2]
        loss_out[j - 1, i - 1] = x[-1]

    model = CrosstalkPhaseModel(topology=topology, er_db=er_out,
                                loss_db=loss_out, phi0=phi0_out, phi2=phi2_out)
    report = FitReport(
        model_kind="m2",
        train_rmse_db=rmse_db(model, train),
        test_rmse_db=rmse_db(model, test) if test is not None else None,
        n_iterations=total_iters,
        wall_time_s=time.perf_counter() - t0,
        converged=converged,
        hyperparameters={
            "phase_starts": len(PHASE_STARTS),
            "seeded_from": "diagonal-prefit" if x0_model is None else "x0_model",
            "optimizer": cfg.to_dict(),
        },
    )
    return model, report


def _mean_factor_db(v2, signs, phi0_combo, diag_idx):
    """Mean total factor dB over samples for a diagonal phase law."""
    r = residual_amplitude(ER_INIT)
    phi = np.asarray(phi0_combo)[None, :] + PHI2_INIT * v2[:, diag_idx]
    f = 0.25 * (r * r + 1.0 + signs[None, :] * 2.0 * r * np.cos(phi))
    return float(np.sum(10.0 * np.log10(f), axis=1).mean())


# ---------------------------------------------------------------------------
# Neural surrogate (m3)
# ---------------------------------------------------------------------------

DEFAULT_SEARCH_SPACE = ((16,), (32,), (64,), (128,),
                        (16, 16), (32, 32), (64, 64), (128, 128))

VALIDATION_EVERY = 10  # outer iterations between validation snapshots


class SurrogateTrainingError(RuntimeError):
    """Every architecture diverged during surrogate training."""

    def __init__(self, message, traces):
        super().__init__(message)
        self.traces = traces


def train_surrogate(topology: MeshTopology, train: Dataset, val: Dataset,
                    cfg: OptimizerConfig | None = None,
                    test: Dataset | None = None,
                    search_space=DEFAULT_SEARCH_SPACE):
    """Architecture search + full-batch training of the network surrogate.

    The feature normalizer is fitted on the training voltages only.  Each
    architecture trains from a seeded init; validation RMSE is snapshotted
    at init and every ``VALIDATION_EVERY`` iterations, and the parameters
    at the best snapshot are kept.  The architecture with the lowest
    validation RMSE wins (ties to the earlier entry).

    Returns ``(NeuralSurrogateModel, FitReport)``.
    """
    cfg = cfg or OptimizerConfig(max_iter=2000, grad_tol=1e-7)
    t0 = time.perf_counter()
    if len(train) == 0 or len(val) == 0:
        raise ValueError("training and validation sets must be non-empty")
    normalizer = FeatureNormalizer().fit(train.voltages)

    results = []
    failures = []
    for a_idx, hidden in enumerate(search_space):
        template = NeuralSurrogateModel.initialize(
            topology, tuple(hidden), normalizer,
            seed=[cfg.seed, a_idx])
        fun = _half_mse_objective(template, train)
        tracker = _ValidationTracker(template, val)
        tracker.snapshot(0, template.param_vector())
        try:
            res = lbfgs_minimize(
                fun, template.param_vector(), cfg,
                callback=lambda it, x, f, g: tracker.maybe_snapshot(it, x))
        except Exception as exc:  # diverged architecture: record and move on
            failures.append((hidden, exc))
            continue
        # Final iterate counts as a snapshot even off the 10-grid.
        tracker.snapshot(res.n_iter, res.x)
        results.append((tracker.best_rmse, a_idx, tracker.best_vec,
                        res, tuple(hidden)))

    if not results:
        raise SurrogateTrainingError(
            "all surrogate architectures failed to train",
            [getattr(exc, "trace", None) for _, exc in failures])

    best_rmse, a_idx, best_vec, res, hidden = min(
        results, key=lambda r: (r[0], r[1]))
    template = NeuralSurrogateModel.initialize(topology, hidden, normalizer,
                                               seed=[cfg.seed, a_idx])
    model = template.with_params(best_vec)

    report = FitReport(
        model_kind="m3",
        train_rmse_db=rmse_db(model, train),
        val_rmse_db=best_rmse,
        test_rmse_db=rmse_db(model, test) if test is not None else None,
        n_iterations=res.n_iter,
        wall_time_s=time.perf_counter() - t0,
        converged=res.converged,
        hyperparameters={
            "hidden_layers": list(hidden),
            "search_space": [list(h) for h in search_space],
            "validation_every": VALIDATION_EVERY,
            "optimizer": cfg.to_dict(),
        },
    )
    return model, report


class _ValidationTracker:
    """Keeps the parameter vector with the lowest validation RMSE."""

    def __init__(self, template: NeuralSurrogateModel, val: Dataset):
        self.template = template
        self.val = val
        self.best_rmse = math.inf
        self.best_vec = None

    def snapshot(self, iteration: int, vec: np.ndarray) -> None:
        current = rmse_db(self.template.with_params(vec), self.val)
        if current < self.best_rmse:
            self.best_rmse = current
            self.best_vec = vec.copy()

    def maybe_snapshot(self, iteration: int, vec: np.ndarray) -> None:
        if iteration % VALIDATION_EVERY == 0:
            self.snapshot(iteration, vec)
