"""Limited-memory quasi-Newton minimizer used by all model fits.

Implements L-BFGS with the two-loop recursion.  Unconstrained problems
use a strong-Wolfe line search (sufficient decrease + curvature); with
box bounds the step is a backtracking search along the projected path
``x(a) = clip(x + a * d)``, and curvature is enforced by only admitting
update pairs with positive ``s . y``.  Every accepted step decreases the
objective, so traces are monotone by construction.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class OptimizerConfig:
    """Settings for :func:`lbfgs_minimize`.

    ``c1``/``c2`` are the sufficient-decrease and curvature constants of
    the line search and must satisfy ``0 < c1 < c2 < 1``.
    """

    max_iter: int = 500
    grad_tol: float = 1e-7
    memory: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    max_ls_steps: int = 30
    restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.max_iter < 1 or self.memory < 1:
            raise ValueError("max_iter and memory must be >= 1")

    def to_dict(self) -> dict:
        return {
            "max_iter": self.max_iter, "grad_tol": self.grad_tol,
            "memory": self.memory, "c1": self.c1, "c2": self.c2,
            "max_ls_steps": self.max_ls_steps, "restarts": self.restarts,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        return cls(**d)


@dataclass
class TracePoint:
    iteration: int
    objective: float
    grad_norm: float
    step: float


@dataclass
class OptimizeResult:
    x: np.ndarray
    f: float
    grad_norm: float
    n_iter: int
    converged: bool
    message: str
    trace: list = field(default_factory=list)


class DivergedError(RuntimeError):
    """The objective became non-finite during the search."""

    def __init__(self, message: str, trace: list):
        super().__init__(message)
        self.trace = trace


def write_trace_csv(trace: list, path) -> None:
    lines = ["iteration,objective,grad_norm,step"]
    for p in trace:
        lines.append(f"{p.iteration},{p.objective!r},{p.grad_norm!r},{p.step!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _two_loop(g, s_list, y_list, rho_list):
    """H @ g via the two-loop recursion with scaled initial Hessian."""
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def _eval(fun, x, trace):
    f, g = fun(x)
    f = float(f)
    g = np.asarray(g, dtype=float)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise DivergedError(f"non-finite objective/gradient (f={f})", trace)
    return f, g


def _wolfe_search(fun, x, f0, g0, d, cfg, trace):
    """Strong Wolfe line search; returns (alpha, x1, f1, g1) or None."""
    dg0 = float(g0 @ d)
    if dg0 >= 0:
        return None

    def probe(alpha):
        return fun(x + alpha * d)

    def zoom(lo, f_lo, g_lo, hi, f_hi):
        # f_hi may be inf (non-finite trial treated as "too far")
        for _ in range(cfg.max_ls_steps):
            alpha = 0.5 * (lo + hi)
            f_a, g_a = probe(alpha)
            f_a = float(f_a)
            if not np.isfinite(f_a):
                hi, f_hi = alpha, np.inf
                continue
            if f_a > f0 + cfg.c1 * alpha * dg0 or f_a >= f_lo:
                hi, f_hi = alpha, f_a
                continue
            dg_a = float(np.asarray(g_a) @ d)
            if abs(dg_a) <= -cfg.c2 * dg0:
                return alpha, f_a, np.asarray(g_a, dtype=float)
            if dg_a * (hi - lo) >= 0:
                hi, f_hi = lo, f_lo
            lo, f_lo, g_lo = alpha, f_a, g_a
        # Curvature never satisfied; accept the best decrease point if any.
        if f_lo < f0 and lo > 0:
            g_lo = np.asarray(g_lo, dtype=float)
            return lo, f_lo, g_lo
        return None

    alpha_prev, f_prev, g_prev = 0.0, f0, g0
    alpha = 1.0
    saw_nonfinite = False
    for it in range(cfg.max_ls_steps):
        f_a, g_a = probe(alpha)
        f_a = float(f_a)
        if not np.isfinite(f_a):
            saw_nonfinite = True
            result = zoom(alpha_prev, f_prev, g_prev, alpha, np.inf)
            if result is None and saw_nonfinite and f_prev >= f0:
                raise DivergedError("line search hit a non-finite region", trace)
            return _pack(result, x, d)
        if f_a > f0 + cfg.c1 * alpha * dg0 or (it > 0 and f_a >= f_prev):
            return _pack(zoom(alpha_prev, f_prev, g_prev, alpha, f_a), x, d)
        dg_a = float(np.asarray(g_a) @ d)
        if abs(dg_a) <= -cfg.c2 * dg0:
            return _pack((alpha, f_a, np.asarray(g_a, dtype=float)), x, d)
        if dg_a >= 0:
            return _pack(zoom(alpha, f_a, g_a, alpha_prev, f_prev), x, d)
        alpha_prev, f_prev, g_prev = alpha, f_a, g_a
        alpha *= 2.0
    return None


def _pack(result, x, d):
    if result is None:
        return None
    alpha, f_a, g_a = result
    return alpha, x + alpha * d, f_a, g_a


def _projected_search(fun, x, f0, g0, d, lo, hi, cfg):
    """Backtracking sufficient-decrease search along the projected path."""
    alpha = 1.0
    for _ in range(cfg.max_ls_steps):
        x_a = np.clip(x + alpha * d, lo, hi)
        step = x_a - x
        if not np.any(step):
            return None
        f_a, g_a = fun(x_a)
        f_a = float(f_a)
        decrease = float(g0 @ step)
        if np.isfinite(f_a) and decrease < 0 and f_a <= f0 + cfg.c1 * decrease:
            return alpha, x_a, f_a, np.asarray(g_a, dtype=float)
        alpha *= 0.5
    return None


def lbfgs_minimize(fun, x0, cfg: OptimizerConfig | None = None, bounds=None,
                   callback=None) -> OptimizeResult:
    """Minimize ``fun(x) -> (f, grad)`` from ``x0``.

    Args:
        fun: objective returning value and gradient.
        x0: start point.
        cfg: optimizer settings; defaults to ``OptimizerConfig()``.
        bounds: optional ``(lower, upper)`` arrays (or scalars) for a box;
            iterates stay inside via projection.
        callback: optional ``callback(iteration, x, f, grad)`` called after
            every accepted step.

    Returns an :class:`OptimizeResult` whose trace is strictly decreasing
    in the objective.  Raises :class:`DivergedError` if the objective is
    non-finite at the start or the search cannot leave a non-finite region.
    """
    cfg = cfg or OptimizerConfig()
    x = np.asarray(x0, dtype=float).copy()
    bounded = bounds is not None
    if bounded:
        lo = np.broadcast_to(np.asarray(bounds[0], dtype=float), x.shape)
        hi = np.broadcast_to(np.asarray(bounds[1], dtype=float), x.shape)
        x = np.clip(x, lo, hi)

    trace: list = []
    f, g = _eval(fun, x, trace)

    def grad_measure():
        if bounded:
            return float(np.max(np.abs(x - np.clip(x - g, lo, hi))))
        return float(np.max(np.abs(g)))

    gnorm = grad_measure()
    trace.append(TracePoint(0, f, gnorm, 0.0))
    s_list, y_list, rho_list = [], [], []
    converged = gnorm <= cfg.grad_tol
    message = "gradient tolerance reached" if converged else "max iterations"
    n_iter = 0

    for it in range(1, cfg.max_iter + 1):
        if converged:
            break
        d = -_two_loop(g, s_list, y_list, rho_list)
        if float(d @ g) >= 0:
            # Curvature memory is unusable from here; restart steepest.
            s_list, y_list, rho_list = [], [], []
            d = -g
        if bounded:
            found = _projected_search(fun, x, f, g, d, lo, hi, cfg)
            if found is None and s_list:
                s_list, y_list, rho_list = [], [], []
                found = _projected_search(fun, x, f, g, -g, lo, hi, cfg)
        else:
            found = _wolfe_search(fun, x, f, g, d, cfg, trace)
            if found is None and s_list:
                s_list, y_list, rho_list = [], [], []
                found = _wolfe_search(fun, x, f, g, -g, cfg, trace)
        if found is None:
            message = "line search failed to make progress"
            break
        alpha, x_new, f_new, g_new = found
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / sy)
            if len(s_list) > cfg.memory:
                s_list.pop(0)
                y_list.pop(0)
                rho_list.pop(0)
        x, f, g = x_new, f_new, g_new
        n_iter = it
        gnorm = grad_measure()
        trace.append(TracePoint(it, f, gnorm, float(alpha)))
        if callback is not None:
            callback(it, x, f, g)
        if gnorm <= cfg.grad_tol:
            converged = True
            message = "gradient tolerance reached"

    return OptimizeResult(x=x, f=f, grad_norm=gnorm, n_iter=n_iter,
                          converged=converged, message=message, trace=trace)
