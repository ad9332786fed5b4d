import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import solve_continuous_are, solve_continuous_lyapunov

from taylor_rhc import (
    BilinearSystem,
    DegenerateSpectrumError,
    NoStabilizingSolutionError,
    solve_are,
    solve_lyapunov,
    spectral_abscissa,
)
from taylor_rhc.riccati import are_residual


def test_example_system_matches_scipy(example_sys, example_ric):
    s, ric = example_sys, example_ric
    ref = solve_continuous_are(s.A, s.B.reshape(-1, 1), s.C.T @ s.C, np.array([[s.alpha]]))
    np.testing.assert_allclose(ric.Pi, ref, rtol=1e-10, atol=1e-12)
    assert ric.residual <= 1e-10
    assert 1.4 <= ric.lam <= 1.6
    assert ric.lam == pytest.approx(-spectral_abscissa(ric.A_pi))
    np.testing.assert_allclose(ric.A_pi, s.A - np.outer(s.B, s.B @ ric.Pi) / s.alpha)
    assert np.all(np.linalg.eigvalsh(ric.Pi) > 0)


def test_stable_A_without_output_gives_zero(example_sys):
    s = example_sys.replace(A=[[-1.0, 0.3], [0.0, -2.0]], C=np.zeros((1, 2)))
    ric = solve_are(s)
    np.testing.assert_allclose(ric.Pi, 0.0, atol=1e-14)
    assert ric.lam == pytest.approx(1.0)


def test_unstabilizable_raises():
    s = BilinearSystem(A=np.diag([1.0, -1.0]), B=[0.0, 1.0], N=np.zeros((2, 2)), C=np.eye(2), alpha=1.0)
    with pytest.raises(NoStabilizingSolutionError) as exc:
        solve_are(s)
    assert exc.value.eigenvalue == pytest.approx(1.0)


def test_lyapunov_against_scipy(rng):
    for _ in range(5):
        M = rng.standard_normal((3, 3)) - 4 * np.eye(3)
        R = rng.standard_normal((3, 3))
        R = R @ R.T
        X = solve_lyapunov(M, R)
        np.testing.assert_allclose(X, solve_continuous_lyapunov(M.T, -R), rtol=1e-10, atol=1e-12)


def test_lyapunov_singular():
    with pytest.raises(DegenerateSpectrumError):
        solve_lyapunov(np.diag([1.0, -1.0]), np.eye(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_stabilizable_systems(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal(3)
    C = rng.standard_normal((2, 3))
    alpha = float(rng.uniform(0.05, 2.0))
    s = BilinearSystem(A=A, B=B, N=np.zeros((3, 3)), C=C, alpha=alpha)
    # generic random data is controllable and observable; skip the rare near-degenerate draw
    ctrb = np.column_stack([B, A @ B, A @ A @ B])
    if np.linalg.cond(ctrb) > 1e6:
        return
    ric = solve_are(s)
    assert are_residual(s, ric.Pi) <= 1e-8 * max(1.0, np.linalg.norm(ric.Pi))
    assert spectral_abscissa(ric.A_pi) < 0
    ref = solve_continuous_are(A, B.reshape(-1, 1), C.T @ C, np.array([[alpha]]))
    np.testing.assert_allclose(ric.Pi, ref, rtol=1e-6, atol=1e-8)
