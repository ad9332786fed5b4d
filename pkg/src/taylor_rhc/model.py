"""System definition, time grids, signal containers and norms."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, InvalidSystemError

__all__ = [
    "BilinearSystem",
    "TimeGrid",
    "ControlSignal",
    "Trajectory",
    "CostateTrajectory",
    "SystemReport",
    "validate_system",
    "l2_norm",
    "weighted_l2_norm",
    "trajectory_sup_norm",
    "trajectory_l2_norm",
    "load_system",
    "system_to_dict",
    "system_from_dict",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BilinearSystem:
    """Dynamics y' = Ay + (Ny + B)u with running cost |Cy|^2/2 + alpha u^2/2."""

    A: np.ndarray
    B: np.ndarray
    N: np.ndarray
    C: np.ndarray
    alpha: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_1d(np.asarray(self.B, dtype=float)).ravel()
        N = np.atleast_2d(np.asarray(self.N, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise InvalidSystemError(f"A must be square, got shape {A.shape}")
        if B.shape != (n,):
            raise InvalidSystemError(f"B must have length {n}, got shape {B.shape}")
        if N.shape != (n, n):
            raise InvalidSystemError(f"N must be {n}x{n}, got shape {N.shape}")
        if C.ndim != 2 or C.shape[1] != n:
            raise InvalidSystemError(f"C must have {n} columns, got shape {C.shape}")
        alpha = float(self.alpha)
        if not alpha > 0.0 or not math.isfinite(alpha):
            raise InvalidSystemError(f"alpha must be positive and finite, got {self.alpha}")
        for name, arr in (("A", A), ("B", B), ("N", N), ("C", C)):
            if not np.all(np.isfinite(arr)):
                raise InvalidSystemError(f"{name} has non-finite entries")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "N", _frozen(N))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def z(self) -> int:
        return self.C.shape[0]

    def replace(self, **changes) -> BilinearSystem:
        kw = dict(A=self.A, B=self.B, N=self.N, C=self.C, alpha=self.alpha)
        kw.update(changes)
        return BilinearSystem(**kw)

    def kernel_arrays(self):
        """Contiguous arrays in the order the time-stepping kernels expect."""
        A = np.ascontiguousarray(self.A)
        N = np.ascontiguousarray(self.N)
        return dict(
            A=A,
            N=N,
            B=np.ascontiguousarray(self.B),
            C=np.ascontiguousarray(self.C),
            At=np.ascontiguousarray(A.T),
            Nt=np.ascontiguousarray(N.T),
            CtC=np.ascontiguousarray(self.C.T @ self.C),
        )


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with nodes t_start + k*h, k = 0..steps."""

    t_start: float
    h: float
    steps: int

    def __post_init__(self):
        if not self.h > 0.0:
            raise InvalidInputError(f"step h must be positive, got {self.h}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidInputError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))

    @classmethod
    def spanning(cls, length: float, h: float, t_start: float = 0.0) -> TimeGrid:
        """Grid covering (t_start, t_start + length); length/h must be integral."""
        return cls(t_start, h, steps_for(length, h))

    @property
    def t_end(self) -> float:
        return self.t_start + self.steps * self.h

    @property
    def nodes(self) -> np.ndarray:
        return self.t_start + self.h * np.arange(self.steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.t_start + self.h * (np.arange(self.steps) + 0.5)

    def same_as(self, other: TimeGrid) -> bool:
        return (
            self.steps == other.steps
            and math.isclose(self.h, other.h, rel_tol=1e-12)
            and math.isclose(self.t_start, other.t_start, rel_tol=1e-12, abs_tol=1e-12)
        )


def steps_for(length: float, h: float, tol: float = 1e-9) -> int:
    """Number of steps of size h tiling ``length``; raises unless integral."""
    ratio = length / h
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > tol * max(1.0, ratio):
        raise InvalidInputError(f"length {length} is not a positive multiple of h={h}")
    return k


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Scalar control, linear on each grid step.

    ``values[k] = (u at left end, u at right end)`` of step k. A
    piecewise-constant signal has equal columns; a continuous piecewise-linear
    one shares values across step boundaries.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = np.column_stack([v, v])
        if v.shape != (self.grid.steps, 2):
            raise InvalidInputError(f"control needs shape ({self.grid.steps}, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("control has non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def piecewise_constant(cls, grid: TimeGrid, values) -> ControlSignal:
        v = np.asarray(values, dtype=float)
        return cls(grid, np.column_stack([v, v]))

    @classmethod
    def from_nodes(cls, grid: TimeGrid, nodes) -> ControlSignal:
        v = np.asarray(nodes, dtype=float)
        if v.shape != (grid.steps + 1,):
            raise InvalidInputError(f"need {grid.steps + 1} nodal values, got {v.shape}")
        return cls(grid, np.column_stack([v[:-1], v[1:]]))

    @classmethod
    def zeros(cls, grid: TimeGrid) -> ControlSignal:
        return cls(grid, np.zeros((grid.steps, 2)))

    @property
    def left(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def right(self) -> np.ndarray:
        return self.values[:, 1]

    @property
    def midpoint_values(self) -> np.ndarray:
        return 0.5 * (self.left + self.right)

    def is_continuous(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.right[:-1] - self.left[1:]) <= tol))

    def nodes(self) -> np.ndarray:
        """Nodal values of a continuous signal (right limits at interior nodes)."""
        return np.concatenate([self.left, self.right[-1:]])

    def restrict(self, start_step: int, stop_step: int) -> ControlSignal:
        grid = TimeGrid(self.grid.t_start + start_step * self.grid.h, self.grid.h, stop_step - start_step)
        return ControlSignal(grid, self.values[start_step:stop_step])

    def __sub__(self, other: ControlSignal) -> ControlSignal:
        if not self.grid.same_as(other.grid):
            raise InvalidInputError("control signals live on different grids")
        return ControlSignal(self.grid, self.values - other.values)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Node samples of the state; ``midpoints`` optionally holds step midpoints."""

    grid: TimeGrid
    states: np.ndarray
    midpoints: np.ndarray | None = field(default=None)

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.states, dtype=float))
        if s.shape[0] != self.grid.steps + 1:
            raise InvalidInputError(f"trajectory needs {self.grid.steps + 1} nodes, got {s.shape[0]}")
        object.__setattr__(self, "states", _frozen(s))
        if self.midpoints is not None:
            mid = np.atleast_2d(np.asarray(self.midpoints, dtype=float))
            if mid.shape != (self.grid.steps, s.shape[1]):
                raise InvalidInputError("midpoint states do not match the grid")
            object.__setattr__(self, "midpoints", _frozen(mid))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True, eq=False)
class CostateTrajectory:
    grid: TimeGrid
    costates: np.ndarray
    midpoints: np.ndarray | None = field(default=None)

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.costates, dtype=float))
        if s.shape[0] != self.grid.steps + 1:
            raise InvalidInputError(f"costate needs {self.grid.steps + 1} nodes, got {s.shape[0]}")
        object.__setattr__(self, "costates", _frozen(s))
        if self.midpoints is not None:
            object.__setattr__(self, "midpoints", _frozen(self.midpoints))


@dataclass(frozen=True)
class SystemReport:
    stabilizable: bool
    detectable: bool
    spectral_abscissa: float
    uncontrollable_eigenvalues: tuple = ()
    unobservable_eigenvalues: tuple = ()


def _pbh_failures(A, other, stack):
    n = A.shape[0]
    scale = max(np.max(np.abs(A)), np.max(np.abs(other)) if other.size else 0.0, 1e-300)
    bad = []
    for mu in np.linalg.eigvals(A):
        if mu.real < 0.0:
            continue
        shifted = A - mu * np.eye(n)
        M = np.hstack([shifted, other]) if stack == "h" else np.vstack([shifted, other])
        sv = np.linalg.svd(M, compute_uv=False)
        rank = int(np.sum(sv > 1e-10 * scale))
        if rank < n:
            bad.append(complex(mu))
    return tuple(bad)


def validate_system(sys: BilinearSystem) -> SystemReport:
    """PBH rank tests for stabilizability of (A, B) and detectability of (A, C)."""
    A = sys.A
    uncontrollable = _pbh_failures(A, sys.B.reshape(-1, 1), "h")
    unobservable = _pbh_failures(A, sys.C, "v")
    return SystemReport(
        stabilizable=not uncontrollable,
        detectable=not unobservable,
        spectral_abscissa=float(np.max(np.linalg.eigvals(A).real)),
        uncontrollable_eigenvalues=uncontrollable,
        unobservable_eigenvalues=unobservable,
    )


def _step_squares(values):
    a = values[:, 0]
    b = values[:, 1]
    return (a * a + a * b + b * b) / 3.0


def l2_norm(u: ControlSignal) -> float:
    """Exact L2 norm of a signal that is linear on every step."""
    return float(math.sqrt(u.grid.h * np.sum(_step_squares(u.values))))


def weighted_l2_norm(u: ControlSignal, mu: float) -> float:
    """L2 norm of exp(mu t) u(t), with the weight frozen at each step midpoint."""
    w = np.exp(2.0 * mu * u.grid.midpoints)
    return float(math.sqrt(u.grid.h * np.sum(w * _step_squares(u.values))))


def trajectory_sup_norm(y: Trajectory) -> float:
    return float(np.max(np.linalg.norm(y.states, axis=1)))


def trajectory_l2_norm(y: Trajectory) -> float:
    """L2-in-time norm of the state by per-step Simpson (trapezoid without midpoints)."""
    sq = np.sum(y.states**2, axis=1)
    h = y.grid.h
    if y.midpoints is None:
        return float(math.sqrt(h * (np.sum(sq) - 0.5 * (sq[0] + sq[-1]))))
    sm = np.sum(y.midpoints**2, axis=1)
    return float(math.sqrt(h / 6.0 * np.sum(sq[:-1] + 4.0 * sm + sq[1:])))


def system_from_dict(d: dict) -> BilinearSystem:
    try:
        return BilinearSystem(A=d["A"], B=d["B"], N=d["N"], C=d["C"], alpha=d["alpha"])
    except KeyError as exc:
        raise InvalidSystemError(f"system definition lacks key {exc}") from None


def system_to_dict(sys: BilinearSystem) -> dict:
    return {
        "A": sys.A.tolist(),
        "B": sys.B.tolist(),
        "N": sys.N.tolist(),
        "C": sys.C.tolist(),
        "alpha": sys.alpha,
    }


def load_system(path) -> BilinearSystem:
    with open(Path(path)) as fh:
        return system_from_dict(json.load(fh))
