"""Finite-horizon optimal control by reduced-gradient L-BFGS.

The control is linear on every integration step with independent end values
on each step (discontinuous piecewise linear); the decision variables are the
per-step pairs (left value, right value). Keeping the steps uncoupled means a
concatenation of solutions on consecutive windows is itself a member of the
control space, so discrete dynamic programming holds exactly on the grid.

The reduced gradient is the exact derivative of the discrete cost: one forward
RK4 sweep, then a reverse sweep through the same steps (a discrete costate).
As h -> 0 its L2 Riesz representer tends to

    alpha u + <p, N y + B>,   p(T) = D phi(y(T)),

with p the continuous costate. The Riesz map uses the block-diagonal mass
matrix h/6 [[2, 1], [1, 2]] of each step.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, lbfgs
from .errors import DivergenceError, InvalidInputError, ReferenceUnstableError
from .model import BilinearSystem, ControlSignal, CostateTrajectory, TimeGrid, Trajectory, l2_norm, steps_for
from .simulate import CostBreakdown, eval_cost, integrate_adjoint, integrate_state
from .taylor import TerminalPenalty, eval_penalty, grad_penalty

log = logging.getLogger(__name__)

__all__ = [
    "SolverOptions",
    "OcpSolution",
    "reduced_gradient",
    "solve_finite_horizon",
    "reference_solution",
    "ControlProblem",
]


@dataclass(frozen=True)
class SolverOptions:
    grad_tol: float = 1e-12
    max_iters: int = 5000
    lbfgs_memory: int = 10
    h: float = 0.01

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise InvalidInputError("grad_tol must be positive")
        if self.max_iters < 1 or self.lbfgs_memory < 1:
            raise InvalidInputError("max_iters and lbfgs_memory must be at least 1")
        if not self.h > 0:
            raise InvalidInputError("h must be positive")

    @classmethod
    def from_config(cls, d: dict | None) -> SolverOptions:
        d = dict(d or {})
        unknown = set(d) - {"grad_tol", "max_iters", "lbfgs_memory", "h"}
        if unknown:
            raise InvalidInputError(f"unknown solver options: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class OcpSolution:
    u: ControlSignal
    y: Trajectory
    p: CostateTrajectory
    cost: CostBreakdown
    grad_norm: float
    iterations: int
    converged: bool
    cost_history: list = field(default_factory=list, repr=False)
    # horizon-extension certificate; only set by reference_solution
    certificate: float = math.nan


def _mass_solve(g, h):
    a = g[0::2]
    b = g[1::2]
    out = np.empty_like(g)
    out[0::2] = (2.0 / h) * (2.0 * a - b)
    out[1::2] = (2.0 / h) * (2.0 * b - a)
    return out


class ControlProblem:
    """Cost and reduced gradient of one finite-horizon problem.

    The decision vector is ``u.values.ravel()``: left and right values of step
    0, then of step 1, and so on.
    """

    def __init__(self, sys: BilinearSystem, grid: TimeGrid, phi: TerminalPenalty, y0):
        self.sys = sys
        self.grid = grid
        self.phi = phi
        self.y0 = np.ascontiguousarray(np.asarray(y0, dtype=float))
        if self.y0.shape != (sys.n,):
            raise InvalidInputError(f"initial state must have length {sys.n}")
        self.k = sys.kernel_arrays()
        self.h = grid.h
        self._last = None

    @property
    def size(self) -> int:
        return 2 * self.grid.steps

    def _forward(self, v):
        ua = np.ascontiguousarray(v[0::2])
        ub = np.ascontiguousarray(v[1::2])
        Y, Ym, bad = kernels.rk4_forward(self.k["A"], self.k["N"], self.k["B"], self.y0, ua, ub, self.h)
        return ua, ub, Y, Ym, bad

    def cost(self, v) -> float:
        """Total cost; ``inf`` when the state blows up."""
        ua, ub, Y, Ym, bad = self._forward(v)
        if bad >= 0:
            return math.inf
        J = self._cost_from(ua, ub, Y, Ym)
        self._last = (v.copy(), ua, ub, Y, Ym)
        return J

    def _cost_from(self, ua, ub, Y, Ym):
        # trial points of the line search may send the state far out; an
        # overflowing cost is just +inf and gets rejected
        with np.errstate(over="ignore", invalid="ignore"):
            sc = kernels.state_cost(self.k["C"], Y, Ym, self.h)
            cc = 0.5 * self.sys.alpha * self.h * float(np.sum(ua * ua + ua * ub + ub * ub)) / 3.0
            J = sc + cc + eval_penalty(self.phi, Y[-1])
        return J if math.isfinite(J) else math.inf

    def gradient(self, v) -> np.ndarray:
        """Euclidean gradient of the discrete cost with respect to the decision vector."""
        if self._last is not None and np.array_equal(self._last[0], v):
            _, ua, ub, Y, Ym = self._last
        else:
            ua, ub, Y, Ym, bad = self._forward(v)
            if bad >= 0:
                raise DivergenceError(f"state became non-finite at node {bad}", node=int(bad))
        k = self.k
        gT = np.ascontiguousarray(grad_penalty(self.phi, Y[-1]))
        ga, gb = kernels.cost_gradient(k["A"], k["N"], k["B"], k["CtC"], Y, Ym, ua, ub, self.h, self.sys.alpha, gT)
        g = np.empty(2 * ga.shape[0])
        g[0::2] = ga
        g[1::2] = gb
        return g

    def riesz(self, g) -> np.ndarray:
        return _mass_solve(g, self.h)

    def representer(self, v) -> np.ndarray:
        return self.riesz(self.gradient(v))


def reduced_gradient(sys: BilinearSystem, u: ControlSignal, y0, phi: TerminalPenalty) -> ControlSignal:
    """L2 representer of the cost derivative, as a signal on the grid of ``u``.

    For any direction w that is linear on each step, the directional
    derivative of the cost equals the L2 inner product of w with the result.
    """
    prob = ControlProblem(sys, u.grid, phi, y0)
    v = u.values.ravel().copy()
    if not math.isfinite(prob.cost(v)):
        raise DivergenceError("state became non-finite")
    return ControlSignal(u.grid, prob.representer(v).reshape(-1, 2))


def solve_finite_horizon(sys: BilinearSystem, T: float, phi: TerminalPenalty, y0,
                         opts: SolverOptions = SolverOptions(), u_init=None, t_start: float = 0.0) -> OcpSolution:
    """Stationary point of the horizon-T problem reached from ``u_init`` (zero by default)."""
    if T < opts.h * (1 - 1e-12):
        raise InvalidInputError(f"horizon {T} is shorter than the step {opts.h}")
    grid = TimeGrid(t_start, opts.h, steps_for(T, opts.h))
    prob = ControlProblem(sys, grid, phi, y0)
    m = grid.steps
    if u_init is None and phi.kind == "taylor3":
        # the cubic penalty is unbounded below far from the origin; start inside
        # the basin of the local solution by first solving with its quadratic part
        quad = TerminalPenalty("taylor2", phi.matrix)
        v0 = solve_finite_horizon(sys, T, quad, y0, opts, t_start=t_start).u.values.ravel()
    elif u_init is None:
        v0 = np.zeros(2 * m)
    else:
        v0 = np.asarray(u_init.values if isinstance(u_init, ControlSignal) else u_init, dtype=float)
        if v0.shape == (m,):
            v0 = np.repeat(v0, 2)
        v0 = v0.reshape(-1).copy()
        if v0.shape != (2 * m,):
            raise InvalidInputError(f"initial control needs {m} steps, got shape {np.shape(u_init)}")

    try:
        res = lbfgs.minimize(prob.cost, prob.gradient, v0, prob.riesz, tol=opts.grad_tol,
                             max_iters=opts.max_iters, memory=opts.lbfgs_memory, gamma0=1.0 / sys.alpha)
    except FloatingPointError:
        raise DivergenceError("state is non-finite for the initial control") from None
    if not res.converged:
        log.warning("finite-horizon solve (T=%g) stopped unconverged: %s, |g|=%.3e after %d iterations",
                    T, res.message, res.grad_norm, res.iterations)

    # certificate: rebuild everything from the returned control
    u = ControlSignal(grid, res.x.reshape(-1, 2))
    y = integrate_state(sys, u, y0)
    p = integrate_adjoint(sys, y, u, grad_penalty(phi, y.final))
    cost = eval_cost(sys, y, u, phi)
    return OcpSolution(u, y, p, cost, res.grad_norm, res.iterations, res.converged, res.history)


def reference_solution(sys: BilinearSystem, y0, L: float, opts: SolverOptions = SolverOptions(),
                       phi: TerminalPenalty | None = None, extension: float = 3.0,
                       certificate_tol: float = 1e-8) -> OcpSolution:
    """Approximation of the infinite-horizon optimal control on (0, L).

    Solves on (0, L) with the third-order Taylor penalty and checks that
    solving on (0, L + extension) changes the control on (0, L) by at most
    ``certificate_tol`` in L2.
    """
    if phi is None:
        from .riccati import solve_are
        from .taylor import solve_cubic_term

        ric = solve_are(sys)
        phi = TerminalPenalty.taylor3(ric, solve_cubic_term(sys, ric))
    sol = solve_finite_horizon(sys, L, phi, y0, opts)
    longer = solve_finite_horizon(sys, L + extension, phi, y0, opts)
    m = sol.u.grid.steps
    diff = l2_norm(longer.u.restrict(0, m) - sol.u)
    if not diff <= certificate_tol:
        raise ReferenceUnstableError(
            f"reference control moves by {diff:.3e} when the horizon grows from {L} to {L + extension}",
            difference=diff, norm=l2_norm(sol.u))
    return dataclasses.replace(sol, certificate=diff)
