import math

import numpy as np
import pytest

from taylor_rhc.lbfgs import minimize


def test_quadratic_with_weighted_inner_product(rng):
    Q = rng.standard_normal((6, 6))
    Q = Q @ Q.T + 6 * np.eye(6)
    c = rng.standard_normal(6)
    w = rng.uniform(0.5, 2.0, 6)  # diagonal mass matrix
    res = minimize(lambda x: 0.5 * x @ Q @ x - c @ x, lambda x: Q @ x - c, np.zeros(6), lambda g: g / w, tol=1e-12)
    assert res.converged
    np.testing.assert_allclose(res.x, np.linalg.solve(Q, c), rtol=1e-9)
    # accepted costs never rise beyond the line search's rounding allowance
    assert np.all(np.diff(res.history) <= 1e-13 * np.max(np.abs(res.history)))


def test_rosenbrock():
    def f(x):
        return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

    def g(x):
        return np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2), 200 * (x[1] - x[0] ** 2)])

    res = minimize(f, g, np.array([-1.2, 1.0]), lambda v: v, tol=1e-10)
    assert res.converged
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-8)


def test_infinite_trial_points_are_rejected():
    # cost is +inf for x > 1; the minimum of (x - 2)^2 restricted there is at the wall
    def f(x):
        return math.inf if x[0] > 1.0 else (x[0] - 2.0) ** 2

    res = minimize(f, lambda x: np.array([2 * (x[0] - 2.0)]), np.array([0.0]), lambda v: v, max_iters=50)
    assert res.x[0] <= 1.0
    assert not res.converged


def test_infinite_start_raises():
    with pytest.raises(FloatingPointError):
        minimize(lambda x: math.inf, lambda x: x, np.zeros(2), lambda v: v)


def test_iteration_cap():
    res = minimize(lambda x: float(x @ x), lambda x: 2 * x, np.ones(3), lambda v: v, max_iters=0)
    assert not res.converged and res.iterations == 0
