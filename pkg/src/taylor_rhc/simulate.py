"""State and costate integration, and finite-horizon cost evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DivergenceError, InvalidInputError
from .model import BilinearSystem, ControlSignal, CostateTrajectory, Trajectory
from .taylor import TerminalPenalty, eval_penalty

__all__ = ["CostBreakdown", "integrate_state", "integrate_adjoint", "eval_cost"]


@dataclass(frozen=True)
class CostBreakdown:
    state_cost: float
    control_cost: float
    terminal_cost: float
    total: float


def _as_state(y0, n):
    y0 = np.ascontiguousarray(np.atleast_1d(np.asarray(y0, dtype=float)))
    if y0.shape != (n,):
        raise InvalidInputError(f"initial state must have length {n}, got shape {y0.shape}")
    return y0


def _endpoints(u: ControlSignal):
    return np.ascontiguousarray(u.left), np.ascontiguousarray(u.right)


def integrate_state(sys: BilinearSystem, u: ControlSignal, y0) -> Trajectory:
    """Classical RK4 with the control evaluated at each stage time."""
    k = sys.kernel_arrays()
    ua, ub = _endpoints(u)
    Y, Ym, bad = kernels.rk4_forward(k["A"], k["N"], k["B"], _as_state(y0, sys.n), ua, ub, u.grid.h)
    if bad >= 0:
        raise DivergenceError(f"state became non-finite at node {bad} (t={u.grid.t_start + bad * u.grid.h:.4g})",
                              node=int(bad))
    return Trajectory(u.grid, Y, Ym)


def integrate_adjoint(sys: BilinearSystem, y: Trajectory, u: ControlSignal, pT) -> CostateTrajectory:
    """Backward RK4 for -p' = (A + uN)^T p + C^T C y with p(T) = pT."""
    if not y.grid.same_as(u.grid):
        raise InvalidInputError("state and control grids differ")
    if y.midpoints is None:
        raise InvalidInputError("adjoint integration needs the stored midpoint states")
    k = sys.kernel_arrays()
    ua, ub = _endpoints(u)
    P, Pm = kernels.rk4_adjoint(
        k["At"], k["Nt"], k["CtC"], np.ascontiguousarray(y.states), np.ascontiguousarray(y.midpoints),
        ua, ub, u.grid.h, _as_state(pT, sys.n),
    )
    return CostateTrajectory(u.grid, P, Pm)


def control_cost(sys: BilinearSystem, u: ControlSignal) -> float:
    a, b = u.left, u.right
    return 0.5 * sys.alpha * u.grid.h * float(np.sum(a * a + a * b + b * b)) / 3.0


def eval_cost(sys: BilinearSystem, y: Trajectory, u: ControlSignal, phi: TerminalPenalty) -> CostBreakdown:
    if not y.grid.same_as(u.grid):
        raise InvalidInputError("state and control grids differ")
    if y.midpoints is None:
        raise InvalidInputError("cost evaluation needs the stored midpoint states")
    sc = float(kernels.state_cost(np.ascontiguousarray(sys.C), np.ascontiguousarray(y.states),
                                  np.ascontiguousarray(y.midpoints), y.grid.h))
    cc = control_cost(sys, u)
    tc = eval_penalty(phi, y.final)
    return CostBreakdown(sc, cc, tc, sc + cc + tc)
