import numpy as np
import pytest

from taylor_rhc import (
    BilinearSystem,
    InvalidInputError,
    SymTensor3,
    TerminalPenalty,
    eval_penalty,
    grad_penalty,
    solve_are,
    solve_cubic_term,
)
from taylor_rhc.taylor import cubic_hjb_residual, penalty_from_config


@pytest.mark.parametrize("a,b,n,alpha", [(-1.0, 1.0, 1.0, 1.0), (0.7, 1.3, -0.4, 0.2)])
def test_scalar_closed_form(a, b, n, alpha):
    s = BilinearSystem(A=[[a]], B=[b], N=[[n]], C=[[1.0]], alpha=alpha)
    ric = solve_are(s)
    p = ric.Pi[0, 0]
    # scalar ARE: 2 a p + 1 - b^2 p^2 / alpha = 0
    assert p == pytest.approx(alpha * (a + np.sqrt(a * a + b * b / alpha)) / b**2, rel=1e-10)
    a_pi = ric.A_pi[0, 0]
    t = solve_cubic_term(s, ric).entries[0, 0, 0]
    # t y^3 a_pi / 2 = p^2 b n y^3 / alpha
    assert t == pytest.approx(2 * p * p * b * n / (alpha * a_pi), rel=1e-12)


def test_hjb_cubic_identity(example_sys, example_ric, example_T3, rng):
    ys = rng.standard_normal((100, 2))
    for y in ys / np.linalg.norm(ys, axis=1, keepdims=True):
        assert abs(cubic_hjb_residual(example_sys, example_ric, example_T3, y)) <= 1e-9


def test_linear_system_has_no_cubic_term(linear_sys):
    assert np.all(solve_cubic_term(linear_sys, solve_are(linear_sys)).entries == 0.0)


def test_tensor_is_symmetric(example_T3, rng):
    u, v, w = rng.standard_normal((3, 2))
    vals = [example_T3(u, v, w), example_T3(v, u, w), example_T3(w, v, u), example_T3(u, w, v)]
    assert np.ptp(vals) <= 1e-14
    with pytest.raises(InvalidInputError):
        SymTensor3(np.zeros((2, 2)))


def test_penalty_gradients_match_differences(example_phis, rng):
    eps = 1e-6
    for phi in example_phis.values():
        y = rng.standard_normal(2)
        g = grad_penalty(phi, y)
        fd = [(eval_penalty(phi, y + eps * e) - eval_penalty(phi, y - eps * e)) / (2 * eps) for e in np.eye(2)]
        np.testing.assert_allclose(g, fd, rtol=1e-7, atol=1e-9)


def test_penalty_values(example_ric, example_T3):
    y = np.array([0.3, -0.2])
    assert eval_penalty(TerminalPenalty.zero(), y) == 0.0
    assert eval_penalty(TerminalPenalty.taylor2(example_ric), y) == pytest.approx(0.5 * y @ example_ric.Pi @ y)
    assert eval_penalty(TerminalPenalty.taylor3(example_ric, example_T3), y) == pytest.approx(
        0.5 * y @ example_ric.Pi @ y + example_T3(y, y, y) / 6)


def test_taylor3_with_zero_tensor_is_taylor2(example_ric, rng):
    p3 = TerminalPenalty.taylor3(example_ric, SymTensor3(np.zeros((2, 2, 2))))
    p2 = TerminalPenalty.taylor2(example_ric)
    for y in rng.standard_normal((10, 2)):
        assert eval_penalty(p3, y) == eval_penalty(p2, y)
        np.testing.assert_array_equal(grad_penalty(p3, y), grad_penalty(p2, y))


def test_penalty_validation(example_sys):
    with pytest.raises(InvalidInputError, match="symmetric"):
        TerminalPenalty.quadratic([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(InvalidInputError, match="semi-definite"):
        TerminalPenalty.quadratic([[-1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InvalidInputError):
        TerminalPenalty("taylor3", np.eye(2))
    with pytest.raises(InvalidInputError):
        penalty_from_config({"kind": "cubic"}, example_sys)
    assert penalty_from_config({"kind": "taylor3"}, example_sys).order == 3
    assert penalty_from_config({"kind": "quadratic", "Q": np.eye(2).tolist()}, example_sys).order == 2
