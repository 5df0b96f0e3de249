import numpy as np
import pytest

from mzimesh.optimize import (
    DivergedError,
    OptimizerConfig,
    lbfgs_minimize,
    write_trace_csv,
)


def assert_monotone_descent(trace):
    objectives = [p.objective for p in trace]
    assert all(b <= a + 1e-15 for a, b in zip(objectives, objectives[1:]))


def test_scalar_quadratic():
    def f(x):
        return (x[0] - 3.0) ** 2, np.array([2.0 * (x[0] - 3.0)])

    res = lbfgs_minimize(f, np.array([0.0]), OptimizerConfig(grad_tol=1e-10))
    assert res.converged
    assert abs(res.x[0] - 3.0) < 1e-8
    assert_monotone_descent(res.trace)


def test_rosenbrock():
    def f(x):
        a, b = x
        val = (1 - a) ** 2 + 100 * (b - a * a) ** 2
        grad = np.array([
            -2 * (1 - a) - 400 * a * (b - a * a),
            200 * (b - a * a),
        ])
        return val, grad

    res = lbfgs_minimize(f, np.array([-1.2, 1.0]),
                         OptimizerConfig(max_iter=500, grad_tol=1e-10))
    assert res.converged
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-6)
    assert_monotone_descent(res.trace)


def test_quadratic_50d_matches_direct_solve():
    rng = np.random.default_rng(40)
    b_mat = rng.normal(size=(50, 50))
    a_mat = b_mat @ b_mat.T + 50 * np.eye(50)
    rhs = rng.normal(size=50)
    x_star = np.linalg.solve(a_mat, rhs)  # direct-solve oracle

    def f(x):
        return 0.5 * x @ a_mat @ x - rhs @ x, a_mat @ x - rhs

    res = lbfgs_minimize(f, np.zeros(50),
                         OptimizerConfig(max_iter=2000, grad_tol=1e-6))
    assert res.converged
    assert np.max(np.abs(res.x - x_star)) < 1e-8
    assert_monotone_descent(res.trace)


def test_never_returns_worse_than_start():
    # nasty oscillatory function; result must not exceed f(x0)
    def f(x):
        val = float(np.sum(x ** 2) + 3 * np.sin(5 * x).sum())
        grad = 2 * x + 15 * np.cos(5 * x)
        return val, grad

    x0 = np.array([2.0, -1.0, 0.5])
    f0 = f(x0)[0]
    res = lbfgs_minimize(f, x0, OptimizerConfig(max_iter=50))
    assert res.f <= f0
    assert_monotone_descent(res.trace)


def test_box_bounds_projection():
    # separable quadratic: bounded solution is the clipped free minimum
    center = np.array([3.0, -2.0, 0.5])

    def f(x):
        return np.sum((x - center) ** 2), 2 * (x - center)

    lo = np.zeros(3)
    hi = np.ones(3)
    res = lbfgs_minimize(f, np.full(3, 0.5), OptimizerConfig(grad_tol=1e-10),
                         bounds=(lo, hi))
    assert res.converged
    assert np.allclose(res.x, np.clip(center, lo, hi), atol=1e-8)


def test_bounded_start_outside_box_is_projected():
    def f(x):
        return float(np.sum(x ** 2)), 2 * x

    res = lbfgs_minimize(f, np.array([5.0]), OptimizerConfig(),
                         bounds=(np.array([1.0]), np.array([2.0])))
    assert res.x[0] == pytest.approx(1.0, abs=1e-10)


def test_nonfinite_start_raises():
    def f(x):
        return np.inf, np.zeros(1)

    with pytest.raises(DivergedError):
        lbfgs_minimize(f, np.zeros(1))


def test_nonfinite_region_raises_with_trace():
    # gradient points straight into a wall of infinities
    def f(x):
        if x[0] < 0:
            return np.inf, np.zeros(1)
        return float(x[0]), np.array([1.0])

    with pytest.raises(DivergedError) as err:
        lbfgs_minimize(f, np.array([0.0]))
    assert err.value.trace  # partial trace is attached


def test_nonfinite_trial_recovers():
    # f is infinite left of -1 but the minimum at 0 is reachable
    def f(x):
        if x[0] < -1.0:
            return np.inf, np.zeros(1)
        return x[0] ** 2, np.array([2.0 * x[0]])

    res = lbfgs_minimize(f, np.array([4.0]), OptimizerConfig(grad_tol=1e-10))
    assert res.converged
    assert abs(res.x[0]) < 1e-8


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(c1=0.5, c2=0.1)
    with pytest.raises(ValueError):
        OptimizerConfig(grad_tol=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(max_iter=0)


def test_callback_sees_every_iteration():
    seen = []

    def f(x):
        return float(np.sum((x - 1) ** 2)), 2 * (x - 1)

    lbfgs_minimize(f, np.zeros(4), OptimizerConfig(grad_tol=1e-10),
                   callback=lambda it, x, fv, g: seen.append(it))
    assert seen == list(range(1, len(seen) + 1))


def test_trace_csv(tmp_path):
    def f(x):
        return (x[0] - 3.0) ** 2, np.array([2.0 * (x[0] - 3.0)])

    res = lbfgs_minimize(f, np.array([0.0]))
    path = tmp_path / "trace.csv"
    write_trace_csv(res.trace, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "iteration,objective,grad_norm,step"
    assert len(lines) == len(res.trace) + 1
