import numpy as np
import pytest

from taylor_rhc import (
    InvalidInputError,
    RhcConfig,
    compare_to_reference,
    decay_certificate,
    integrate_state,
    run_rhc,
    solve_finite_horizon,
)

Y0 = np.array([1.0, 1.0])


def test_single_window_equals_finite_horizon(example_sys, example_phis):
    res = run_rhc(example_sys, Y0, RhcConfig(1.0, 1.0, example_phis[2], L=1.0))
    sol = solve_finite_horizon(example_sys, 1.0, example_phis[2], Y0)
    assert len(res.windows) == 1
    np.testing.assert_array_equal(res.u.values, sol.u.values)


def test_zero_initial_state(example_sys, example_phis):
    res = run_rhc(example_sys, [0.0, 0.0], RhcConfig(0.5, 1.0, example_phis[3], L=2.0))
    assert np.all(res.u.values == 0.0) and np.all(res.y.states == 0.0)
    cert = decay_certificate(res)
    assert cert.trivially_stable and cert.passed


def test_windows_and_truncated_last_window(example_sys, example_phis):
    cfg = RhcConfig(0.7, 1.0, example_phis[2], L=5.0)
    assert cfg.n_windows == 8  # ceil(5 / 0.7)
    res = run_rhc(example_sys, Y0, cfg)
    assert len(res.windows) == 8
    np.testing.assert_allclose(res.window_starts, 0.7 * np.arange(8))
    assert res.u.grid.steps == 500


def test_replay_and_optimality_gap(example_sys, example_phis, example_ref):
    res = run_rhc(example_sys, Y0, RhcConfig(0.4, 1.0, example_phis[2]), reference=example_ref)
    replay = integrate_state(example_sys, res.u, Y0)
    np.testing.assert_allclose(replay.states, res.y.states, rtol=0, atol=1e-12)
    m = compare_to_reference(res, example_ref)
    assert m.suboptimality >= -1e-9
    assert m.control_error > 0
    # window deviations: b_0 is exactly zero, a_n decays with the closed loop
    assert res.b_n[0] == 0.0
    assert res.a_n.size == len(res.windows)
    assert res.a_n[-1] < res.a_n[0]


def test_decay_certificate(example_sys, example_phis, example_ric):
    res = run_rhc(example_sys, Y0, RhcConfig(0.4, 1.0, example_phis[2]))
    cert = decay_certificate(res, example_ric.lam)
    assert cert.passed
    assert 0.5 <= cert.rate_ratio <= 1.5


@pytest.mark.parametrize("tau,T", [(0.0, 1.0), (1.2, 1.0), (0.015, 1.0)])
def test_config_validation(example_phis, tau, T):
    with pytest.raises(InvalidInputError):
        RhcConfig(tau, T, example_phis[1])


def test_longer_horizon_is_more_accurate(example_sys, example_phis, example_ref):
    errs = []
    for T in (0.4, 1.0, 1.6):
        res = run_rhc(example_sys, Y0, RhcConfig(0.4, T, example_phis[2]))
        errs.append(compare_to_reference(res, example_ref).control_error)
    assert errs[0] > errs[1] > errs[2]
