import numpy as np
import pytest
from scipy.linalg import expm

from taylor_rhc import (
    ControlSignal,
    DivergenceError,
    InvalidInputError,
    TerminalPenalty,
    TimeGrid,
    eval_cost,
    integrate_adjoint,
    integrate_state,
)
from taylor_rhc import kernels
from taylor_rhc.kernels import _numpy as numpy_kernels

Y0 = np.array([1.0, 1.0])


def test_zero_control_matches_expm(example_sys):
    g = TimeGrid(0.0, 0.01, 150)
    y = integrate_state(example_sys, ControlSignal.zeros(g), Y0)
    for k in (0, 37, 150):
        np.testing.assert_allclose(y.states[k], expm(example_sys.A * g.nodes[k]) @ Y0, rtol=1e-9)


def test_constant_control_bilinear_is_linear(example_sys):
    # with constant u the dynamics are y' = (A + uN) y + uB
    u0 = -0.7
    T = 1.3
    g = TimeGrid(0.0, 0.01, 130)
    y = integrate_state(example_sys, ControlSignal.piecewise_constant(g, np.full(130, u0)), Y0)
    M = np.zeros((3, 3))
    M[:2, :2] = example_sys.A + u0 * example_sys.N
    M[:2, 2] = u0 * example_sys.B
    exact = (expm(M * T) @ np.array([1.0, 1.0, 1.0]))[:2]
    np.testing.assert_allclose(y.final, exact, rtol=1e-9)


def test_midpoints_are_fourth_order(example_sys):
    # the Hermite midpoint should track the fine-grid node at the same time;
    # a globally linear control is the same signal on both grids
    fine = TimeGrid(0.0, 0.005, 200)
    coarse = TimeGrid(0.0, 0.01, 100)
    yf = integrate_state(example_sys, ControlSignal.from_nodes(fine, 0.3 - 0.2 * fine.nodes), Y0)
    yc = integrate_state(example_sys, ControlSignal.from_nodes(coarse, 0.3 - 0.2 * coarse.nodes), Y0)
    gap = np.max(np.abs(yc.midpoints - yf.states[1::2]))
    assert gap <= 1e-7


def test_divergence_is_reported(example_sys):
    g = TimeGrid(0.0, 0.1, 100)
    with pytest.raises(DivergenceError) as exc:
        integrate_state(example_sys.replace(A=[[400.0, 0.0], [0.0, 400.0]]), ControlSignal.zeros(g), Y0)
    assert exc.value.node > 0


def test_cost_of_zero_control_and_state(example_sys):
    g = TimeGrid(0.0, 0.01, 10)
    y = integrate_state(example_sys, ControlSignal.zeros(g), [0.0, 0.0])
    c = eval_cost(example_sys, y, ControlSignal.zeros(g), TerminalPenalty.zero())
    assert c.total == 0.0


def test_control_cost_is_exact(example_sys):
    # u(t) = t on (0, 1): alpha/2 * 1/3
    g = TimeGrid(0.0, 0.25, 4)
    u = ControlSignal.from_nodes(g, g.nodes)
    y = integrate_state(example_sys, u, Y0)
    cost = eval_cost(example_sys, y, u, TerminalPenalty.zero())
    assert cost.control_cost == pytest.approx(example_sys.alpha / 6, rel=1e-14)


def test_adjoint_terminal_value_and_grid_checks(example_sys):
    g = TimeGrid(0.0, 0.01, 50)
    u = ControlSignal.zeros(g)
    y = integrate_state(example_sys, u, Y0)
    p = integrate_adjoint(example_sys, y, u, [0.3, -0.1])
    np.testing.assert_array_equal(p.costates[-1], [0.3, -0.1])
    with pytest.raises(InvalidInputError):
        integrate_adjoint(example_sys, y, ControlSignal.zeros(TimeGrid(0.0, 0.01, 40)), [0, 0])


def test_backends_agree(example_sys, rng):
    if kernels.BACKEND == "numpy":
        pytest.skip("compiled kernels disabled")
    k = example_sys.kernel_arrays()
    m, h = 120, 0.01
    ua, ub = rng.standard_normal(m), rng.standard_normal(m)
    args = (k["A"], k["N"], k["B"], Y0, ua, ub, h)
    Y1, Ym1, b1 = kernels.rk4_forward(*args)
    Y2, Ym2, b2 = numpy_kernels.rk4_forward(*args)
    np.testing.assert_allclose(Y1, Y2, rtol=1e-13, atol=1e-14)
    np.testing.assert_allclose(Ym1, Ym2, rtol=1e-13, atol=1e-14)
    assert b1 == b2 == -1
    assert kernels.state_cost(k["C"], Y1, Ym1, h) == pytest.approx(numpy_kernels.state_cost(k["C"], Y2, Ym2, h),
                                                                     rel=1e-13)
    pT = np.array([0.2, -0.4])
    P1, Pm1 = kernels.rk4_adjoint(k["At"], k["Nt"], k["CtC"], Y1, Ym1, ua, ub, h, pT)
    P2, Pm2 = numpy_kernels.rk4_adjoint(k["At"], k["Nt"], k["CtC"], Y2, Ym2, ua, ub, h, pT)
    np.testing.assert_allclose(P1, P2, rtol=1e-12, atol=1e-13)
    g1 = kernels.cost_gradient(k["A"], k["N"], k["B"], k["CtC"], Y1, Ym1, ua, ub, h, 0.1, pT)
    g2 = numpy_kernels.cost_gradient(k["A"], k["N"], k["B"], k["CtC"], Y2, Ym2, ua, ub, h, 0.1, pT)
    for a, b in zip(g1, g2):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
