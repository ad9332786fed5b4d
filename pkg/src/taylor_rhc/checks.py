"""Self-check suite behind ``taylor-rhc check``.

Every check is deterministic (fixed seed) and cheap enough to run on a laptop
in well under a minute once the kernels are compiled.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import paper_system
from .kernels import _numpy as numpy_kernels
from .model import ControlSignal, TimeGrid, l2_norm, weighted_l2_norm
from .ocp import ControlProblem, SolverOptions, reference_solution, solve_finite_horizon
from .rhc import RhcConfig, compare_to_reference, run_rhc
from .riccati import are_residual, solve_are, solve_lyapunov
from .simulate import integrate_state
from .taylor import TerminalPenalty, cubic_hjb_residual, solve_cubic_term

SEED = 20240607

__all__ = ["SEED", "CheckResult", "run_checks", "gradient_fd_errors", "rk4_observed_order"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def gradient_fd_errors(sys, T=1.0, y0=(1.0, 1.0), phi=None, directions=20, eps=1e-6, h=0.01, seed=SEED):
    """Relative gap between the adjoint directional derivative and a central difference, per direction."""
    rng = np.random.default_rng(seed)
    phi = phi or TerminalPenalty.zero()
    m = round(T / h)
    prob = ControlProblem(sys, TimeGrid(0.0, h, m), phi, y0)
    v = 0.5 * rng.standard_normal(2 * m)
    prob.cost(v)
    g = prob.gradient(v)
    out = []
    for _ in range(directions):
        w = rng.standard_normal(2 * m)
        fd = (prob.cost(v + eps * w) - prob.cost(v - eps * w)) / (2 * eps)
        ad = float(g @ w)
        out.append(abs(fd - ad) / max(abs(ad), 1e-300))
    return np.array(out)


def rk4_observed_order(sys, y0=(1.0, 1.0), T=2.0, steps=(20, 40, 80)):
    """Self-convergence order of the state at T under the control u(t) = 0.3 - 0.2 t.

    A globally linear control is represented exactly on every grid, so only
    the time stepping contributes to the error.
    """
    finals = []
    for m in steps:
        grid = TimeGrid(0.0, T / m, m)
        t = grid.nodes
        u = ControlSignal.from_nodes(grid, 0.3 - 0.2 * t)
        finals.append(integrate_state(sys, u, y0).final)
    e1 = np.linalg.norm(finals[0] - finals[1])
    e2 = np.linalg.norm(finals[1] - finals[2])
    return math.log2(e1 / e2)


def _timed(name, fn):
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def run_checks(pi_perturbation=None, quick: bool = False) -> list:
    """Run every check; ``pi_perturbation`` is added to Pi before the ARE residual check (test hook)."""
    sys = paper_system()
    rng = np.random.default_rng(SEED)
    ric = solve_are(sys)
    results = []

    def are_check():
        Pi = ric.Pi if pi_perturbation is None else ric.Pi + np.asarray(pi_perturbation, dtype=float)
        res = are_residual(sys, Pi)
        bound = 1e-10 * max(1.0, np.linalg.norm(Pi))
        ok = res <= bound and 1.4 <= ric.lam <= 1.6
        return ok, f"residual {res:.2e} (bound {bound:.1e}), lambda {ric.lam:.6f}"

    results.append(_timed("riccati residual and decay rate", are_check))

    def lyap_check():
        worst = 0.0
        for _ in range(5):
            M = rng.standard_normal((4, 4)) - 5.0 * np.eye(4)
            R = rng.standard_normal((4, 4))
            R = R @ R.T
            X = solve_lyapunov(M, R)
            worst = max(worst, np.linalg.norm(M.T @ X + X @ M + R) / np.linalg.norm(R))
        return worst <= 1e-10, f"max relative residual {worst:.2e}"

    results.append(_timed("lyapunov identity", lyap_check))

    def cubic_check():
        T3 = solve_cubic_term(sys, ric)
        ys = rng.standard_normal((10, 2))
        worst = max(cubic_hjb_residual(sys, ric, T3, y) / max(1.0, np.linalg.norm(y) ** 3) for y in ys)
        lin = sys.replace(N=np.zeros((2, 2)))
        zero = float(np.max(np.abs(solve_cubic_term(lin, solve_are(lin)).entries)))
        return worst <= 1e-10 and zero == 0.0, f"HJB cubic residual {worst:.2e}, |T3| with N=0: {zero:.1e}"

    results.append(_timed("cubic value-function term", cubic_check))

    def grad_check():
        errs = gradient_fd_errors(sys, directions=5 if quick else 20)
        return errs.max() <= 1e-5, f"max relative error {errs.max():.2e} over {errs.size} directions"

    results.append(_timed("adjoint gradient vs central differences", grad_check))

    def order_check():
        p = rk4_observed_order(sys.replace(N=np.zeros((2, 2))))
        pb = rk4_observed_order(sys)
        return 3.8 <= p <= 4.2 and 3.8 <= pb <= 4.2, f"observed order {p:.3f} (N=0), {pb:.3f} (bilinear)"

    results.append(_timed("RK4 convergence order", order_check))

    def norm_check():
        grid = TimeGrid(0.0, 0.05, 40)
        bad = 0
        for _ in range(50):
            u = ControlSignal(grid, rng.standard_normal((40, 2)))
            w = ControlSignal(grid, rng.standard_normal((40, 2)))
            m0, m1 = sorted(rng.uniform(-2, 2, 2))
            a, b = weighted_l2_norm(u, m0), weighted_l2_norm(u, m1)
            bad += not (a <= b * (1 + 1e-12) and b <= math.exp((m1 - m0) * grid.t_end) * a * (1 + 1e-12))
            s = ControlSignal(grid, u.values + w.values)
            bad += not l2_norm(s) <= (l2_norm(u) + l2_norm(w)) * (1 + 1e-12)
            c = rng.uniform(-3, 3)
            bad += not math.isclose(l2_norm(ControlSignal(grid, c * u.values)), abs(c) * l2_norm(u), rel_tol=1e-12)
        return bad == 0, f"{bad} failures in 150 randomized norm inequalities"

    results.append(_timed("norm properties", norm_check))

    def lq_check():
        lin = sys.replace(N=np.zeros((2, 2)))
        phi = TerminalPenalty.taylor2(solve_are(lin))
        ref = solve_finite_horizon(lin, 5.0, phi, [1.0, 1.0])
        cells = [(0.4, 0.4), (1.0, 2.2)] if quick else [(0.1, 0.1), (0.4, 0.4), (0.1, 1.0), (1.0, 2.2), (2.8, 2.8)]
        worst = 0.0
        for tau, T in cells:
            res = run_rhc(lin, [1.0, 1.0], RhcConfig(tau, T, phi))
            worst = max(worst, l2_norm(res.u - ref.u))
        return worst <= 1e-5, f"max control error {worst:.2e} over {len(cells)} (tau, T) cells with N=0"

    results.append(_timed("receding horizon exact for linear-quadratic", lq_check))

    def rhc_check():
        phi = TerminalPenalty.taylor2(ric)
        ref = reference_solution(sys, [1.0, 1.0], 5.0, SolverOptions())
        res = run_rhc(sys, [1.0, 1.0], RhcConfig(0.4, 1.0, phi), reference=ref)
        replay = integrate_state(sys, res.u, [1.0, 1.0])
        drift = float(np.max(np.abs(replay.states - res.y.states)))
        sub = compare_to_reference(res, ref).suboptimality
        return drift <= 1e-10 and sub >= -1e-9, f"replay drift {drift:.1e}, suboptimality {sub:.2e}"

    results.append(_timed("receding horizon concatenation and optimality gap", rhc_check))

    def backend_check():
        if kernels.BACKEND == "numpy":
            return True, "numpy backend active, nothing to compare"
        k = sys.kernel_arrays()
        m = 200
        ua, ub = rng.standard_normal(m), rng.standard_normal(m)
        y0 = np.array([1.0, -0.5])
        Y1, Ym1, _ = kernels.rk4_forward(k["A"], k["N"], k["B"], y0, ua, ub, 0.01)
        Y2, Ym2, _ = numpy_kernels.rk4_forward(k["A"], k["N"], k["B"], y0, ua, ub, 0.01)
        pT = np.array([0.3, 0.1])
        P1, _ = kernels.rk4_adjoint(k["At"], k["Nt"], k["CtC"], Y1, Ym1, ua, ub, 0.01, pT)
        P2, _ = numpy_kernels.rk4_adjoint(k["At"], k["Nt"], k["CtC"], Y2, Ym2, ua, ub, 0.01, pT)
        gap = max(np.max(np.abs(Y1 - Y2)), np.max(np.abs(P1 - P2)))
        return gap <= 1e-12, f"{kernels.BACKEND} vs numpy max difference {gap:.1e}"

    results.append(_timed("compiled and numpy kernels agree", backend_check))
    return results
