"""Receding-horizon control: repeated finite-horizon solves stitched over (0, L).

Window n starts at t_n = n*tau from y_n, solves the horizon-T problem, keeps
the first tau of its control and trajectory, and hands y_{n+1} = y(tau) of
that same trajectory to the next window. The last window is cut at L when tau
does not divide L.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InvalidInputError, PartialResultError
from .model import BilinearSystem, ControlSignal, TimeGrid, Trajectory, l2_norm, steps_for, trajectory_l2_norm
from .ocp import OcpSolution, SolverOptions, solve_finite_horizon
from .simulate import eval_cost
from .taylor import TerminalPenalty

log = logging.getLogger(__name__)

__all__ = [
    "RhcConfig",
    "WindowRecord",
    "RhcResult",
    "RhcMetrics",
    "DecayCertificate",
    "run_rhc",
    "compare_to_reference",
    "decay_certificate",
    "window_deviations",
]


@dataclass(frozen=True)
class RhcConfig:
    tau: float
    T: float
    phi: TerminalPenalty
    L: float = 5.0
    opts: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if not 0.0 < self.tau <= self.T * (1 + 1e-12):
            raise InvalidInputError(f"need 0 < tau <= T, got tau={self.tau}, T={self.T}")
        if not self.L > 0.0:
            raise InvalidInputError("L must be positive")
        # raise early if any span does not tile the grid
        steps_for(self.tau, self.opts.h)
        steps_for(self.T, self.opts.h)
        steps_for(self.L, self.opts.h)

    @property
    def n_windows(self) -> int:
        h = self.opts.h
        return math.ceil(steps_for(self.L, h) / steps_for(self.tau, h))


@dataclass(frozen=True)
class WindowRecord:
    index: int
    t_start: float
    y_start: np.ndarray
    converged: bool
    grad_norm: float
    iterations: int
    cost: float


@dataclass(frozen=True, eq=False)
class RhcResult:
    system: BilinearSystem
    u: ControlSignal
    y: Trajectory
    windows: list
    a_n: np.ndarray = field(default_factory=lambda: np.empty(0))
    b_n: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def window_states(self) -> np.ndarray:
        return np.array([w.y_start for w in self.windows])

    @property
    def window_starts(self) -> np.ndarray:
        return np.array([w.t_start for w in self.windows])


def run_rhc(sys, y0, cfg: RhcConfig, reference: OcpSolution | None = None, warm_start: bool = True) -> RhcResult:
    h = cfg.opts.h
    ns = steps_for(cfg.tau, h)
    nT = steps_for(cfg.T, h)
    nL = steps_for(cfg.L, h)
    y_n = np.asarray(y0, dtype=float).copy()

    controls, states, mids, records = [], [y_n[None, :]], [], []
    guess = None
    start = 0
    n = 0
    while start < nL:
        take = min(ns, nL - start)
        try:
            sol = solve_finite_horizon(sys, cfg.T, cfg.phi, y_n, cfg.opts, u_init=guess, t_start=start * h)
        except DivergenceError as exc:
            raise DivergenceError(f"window {n}: {exc}", node=exc.node, window=n) from exc
        rec = WindowRecord(n, start * h, y_n.copy(), sol.converged, sol.grad_norm, sol.iterations, sol.cost.total)
        if not sol.converged:
            raise PartialResultError(
                f"window {n} (t={start * h:.4g}) did not converge: |g|={sol.grad_norm:.3e}", records + [rec])
        records.append(rec)
        controls.append(sol.u.values[:take])
        states.append(sol.y.states[1:take + 1])
        mids.append(sol.y.midpoints[:take])
        y_n = sol.y.states[take].copy()
        if warm_start:
            guess = np.concatenate([sol.u.values[ns:], np.zeros((ns, 2))])
        start += take
        n += 1

    grid = TimeGrid(0.0, h, nL)
    u = ControlSignal(grid, np.concatenate(controls))
    y = Trajectory(grid, np.concatenate(states), np.concatenate(mids))
    res = RhcResult(sys, u, y, records)
    if reference is not None:
        a_n, b_n = window_deviations(res, reference, ns)
        res = RhcResult(sys, u, y, records, a_n, b_n)
    return res


@dataclass(frozen=True)
class RhcMetrics:
    control_error: float
    state_error: float
    suboptimality: float
    cost_rhc: float
    cost_reference: float


def _check_same_grid(res: RhcResult, ref: OcpSolution):
    if not res.u.grid.same_as(ref.u.grid):
        raise InvalidInputError("receding-horizon result and reference live on different grids")


def compare_to_reference(res: RhcResult, ref: OcpSolution) -> RhcMetrics:
    """L2 control error, max nodal state error, and cost gap on (0, L) without terminal cost."""
    _check_same_grid(res, ref)
    ctrl = l2_norm(res.u - ref.u)
    st = float(np.max(np.linalg.norm(res.y.states - ref.y.states, axis=1)))
    zero = TerminalPenalty.zero()
    j_rh = eval_cost(res.system, res.y, res.u, zero).total
    j_ref = eval_cost(res.system, ref.y, ref.u, zero).total
    return RhcMetrics(ctrl, st, j_rh - j_ref, j_rh, j_ref)


def window_deviations(res: RhcResult, ref: OcpSolution, steps_per_window: int):
    """Per-window a_n = max(|u - ubar|_L2, |y - ybar|_Linf, |y - ybar|_L2) and b_n = |y_n - ybar(t_n)|."""
    _check_same_grid(res, ref)
    m = res.u.grid.steps
    du = res.u - ref.u
    a_n, b_n = [], []
    for start in range(0, m, steps_per_window):
        stop = min(start + steps_per_window, m)
        dy = Trajectory(
            TimeGrid(start * res.u.grid.h, res.u.grid.h, stop - start),
            res.y.states[start:stop + 1] - ref.y.states[start:stop + 1],
            res.y.midpoints[start:stop] - ref.y.midpoints[start:stop],
        )
        a_n.append(max(l2_norm(du.restrict(start, stop)),
                       float(np.max(np.linalg.norm(dy.states, axis=1))),
                       trajectory_l2_norm(dy)))
        b_n.append(float(np.linalg.norm(dy.states[0])))
    return np.array(a_n), np.array(b_n)


@dataclass(frozen=True)
class DecayCertificate:
    rate: float
    intercept: float
    passed: bool
    trivially_stable: bool = False
    rate_ratio: float = math.nan


def decay_certificate(res: RhcResult, lam: float | None = None) -> DecayCertificate:
    """Least-squares fit of log|y_n| against t_n; ``rate`` is minus the slope.

    ``rate_ratio`` compares the fitted rate with the closed-loop rate ``lam``
    when one is given; it does not affect ``passed``.
    """
    t = res.window_starts
    norms = np.linalg.norm(res.window_states, axis=1)
    if len(norms) < 3:
        raise InvalidInputError("decay certificate needs at least 3 windows")
    keep = norms > 0.0
    if not np.any(keep):
        return DecayCertificate(math.inf, -math.inf, True, trivially_stable=True)
    if np.count_nonzero(keep) < 2:
        raise InvalidInputError("need at least two nonzero window states to fit a rate")
    slope, intercept = np.polyfit(t[keep], np.log(norms[keep]), 1)
    rate = -float(slope)
    ratio = rate / lam if lam else math.nan
    return DecayCertificate(rate, float(intercept), rate > 0.0, rate_ratio=ratio)
