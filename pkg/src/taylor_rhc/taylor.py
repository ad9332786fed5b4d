"""Terminal penalties: zero, quadratic, and second/third-order Taylor expansions
of the value function around the origin.

The cubic term T3 = D^3V(0) is fixed by the cubic part of the stationary HJB
equation

    0 = |Cy|^2/2 + DV(y).Ay - (DV(y).(Ny + B))^2 / (2 alpha).

Inserting V = <y, Pi y>/2 + T3(y, y, y)/6 + ... and collecting cubic terms gives

    T3(y, y, A_pi y) / 2 = <Pi y, B> <Pi y, N y> / alpha    for all y,

a linear equation on symmetric 3-tensors solved by a Kronecker-sum system.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import DegenerateSpectrumError, InvalidInputError
from .model import BilinearSystem
from .riccati import RiccatiSolution

__all__ = [
    "SymTensor3",
    "TerminalPenalty",
    "solve_cubic_term",
    "eval_penalty",
    "grad_penalty",
    "cubic_hjb_residual",
    "penalty_from_config",
    "KINDS",
]

KINDS = ("zero", "quadratic", "taylor2", "taylor3")


def symmetrize3(T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    return sum(np.transpose(T, p) for p in permutations(range(3))) / 6.0


@dataclass(frozen=True, eq=False)
class SymTensor3:
    """Fully symmetric n x n x n tensor; entries are symmetrized on construction."""

    entries: np.ndarray

    def __post_init__(self):
        E = np.asarray(self.entries, dtype=float)
        n = E.shape[0]
        if E.shape != (n, n, n):
            raise InvalidInputError(f"expected a cubic tensor, got shape {E.shape}")
        E = symmetrize3(E)
        E.setflags(write=False)
        object.__setattr__(self, "entries", E)

    def __call__(self, u, v, w) -> float:
        return float(np.einsum("ijk,i,j,k->", self.entries, u, v, w))

    def contract2(self, y) -> np.ndarray:
        """The vector T(y, y, .)."""
        return np.einsum("ijk,i,j->k", self.entries, y, y)


@dataclass(frozen=True, eq=False)
class TerminalPenalty:
    """phi(y) in one of four forms; ``matrix`` is Q (quadratic) or Pi (Taylor)."""

    kind: str
    matrix: np.ndarray | None = None
    T3: SymTensor3 | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown penalty kind {self.kind!r}")
        if self.kind != "zero":
            if self.matrix is None:
                raise InvalidInputError(f"{self.kind} penalty needs a matrix")
            M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
            scale = max(1.0, float(np.max(np.abs(M))))
            if np.max(np.abs(M - M.T)) > 1e-12 * scale:
                raise InvalidInputError("penalty matrix must be symmetric")
            if self.kind == "quadratic" and np.min(np.linalg.eigvalsh(M)) < -1e-10:
                raise InvalidInputError("quadratic penalty matrix must be positive semi-definite")
            M = 0.5 * (M + M.T)
            M.setflags(write=False)
            object.__setattr__(self, "matrix", M)
        if self.kind == "taylor3" and self.T3 is None:
            raise InvalidInputError("taylor3 penalty needs the cubic tensor")

    @classmethod
    def zero(cls) -> TerminalPenalty:
        return cls("zero")

    @classmethod
    def quadratic(cls, Q) -> TerminalPenalty:
        return cls("quadratic", Q)

    @classmethod
    def taylor2(cls, ric: RiccatiSolution) -> TerminalPenalty:
        return cls("taylor2", ric.Pi)

    @classmethod
    def taylor3(cls, ric: RiccatiSolution, T3: SymTensor3) -> TerminalPenalty:
        return cls("taylor3", ric.Pi, T3)

    @property
    def order(self) -> int:
        """Order label k: 1 for zero, 2 for quadratic/taylor2, 3 for taylor3."""
        return {"zero": 1, "quadratic": 2, "taylor2": 2, "taylor3": 3}[self.kind]

    def to_config(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "quadratic":
            d["Q"] = self.matrix.tolist()
        return d


def eval_penalty(phi: TerminalPenalty, y) -> float:
    y = np.asarray(y, dtype=float)
    if phi.kind == "zero":
        return 0.0
    val = 0.5 * float(y @ phi.matrix @ y)
    if phi.kind == "taylor3":
        val += phi.T3(y, y, y) / 6.0
    return val


def grad_penalty(phi: TerminalPenalty, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if phi.kind == "zero":
        return np.zeros_like(y)
    g = phi.matrix @ y
    if phi.kind == "taylor3":
        g = g + 0.5 * phi.T3.contract2(y)
    return g


def _kron_sum3(M) -> np.ndarray:
    """Matrix of T -> sum over slots of T contracted with M in that slot (row-major vec)."""
    n = M.shape[0]
    eye = np.eye(n)
    return np.kron(np.kron(M, eye), eye) + np.kron(np.kron(eye, M), eye) + np.kron(np.kron(eye, eye), M)


def solve_cubic_term(sys: BilinearSystem, ric: RiccatiSolution) -> SymTensor3:
    """Third derivative of the value function at the origin."""
    n = sys.n
    Pi, Api = ric.Pi, ric.A_pi
    PB = Pi @ sys.B
    PN = Pi @ sys.N
    rhs = symmetrize3(np.einsum("i,jk->ijk", PB, 0.5 * (PN + PN.T))) / sys.alpha
    # slot-wise contraction K(T)_{ijl} = sum_k T_{ijk} Api_{kl} + ...; for symmetric T
    # K(T)(y,y,y) = 3 T(y,y,Api y), so the cubic identity reads K(T) = 6 rhs.
    K = _kron_sum3(Api.T)
    try:
        x = np.linalg.solve(K, 6.0 * rhs.reshape(-1))
    except np.linalg.LinAlgError:
        raise DegenerateSpectrumError("eigenvalue triples of A_pi sum to zero; cubic term is not unique") from None
    if not np.all(np.isfinite(x)):
        raise DegenerateSpectrumError("cubic term solve produced non-finite entries")
    return SymTensor3(x.reshape(n, n, n))


def cubic_hjb_residual(sys: BilinearSystem, ric: RiccatiSolution, T3: SymTensor3, y) -> float:
    """T3(y, y, A_pi y)/2 - <Pi y, B><Pi y, N y>/alpha."""
    y = np.asarray(y, dtype=float)
    Py = ric.Pi @ y
    return 0.5 * T3(y, y, ric.A_pi @ y) - float(Py @ sys.B) * float(Py @ (sys.N @ y)) / sys.alpha


def penalty_from_config(cfg: dict, sys: BilinearSystem, ric: RiccatiSolution | None = None,
                        T3: SymTensor3 | None = None) -> TerminalPenalty:
    """Build a penalty from ``{"kind": ..., "Q": ...}``; solves Riccati / cubic terms on demand."""
    kind = cfg.get("kind", "zero") if isinstance(cfg, dict) else str(cfg)
    if kind == "zero":
        return TerminalPenalty.zero()
    if kind == "quadratic":
        if "Q" not in cfg:
            raise InvalidInputError("quadratic penalty needs 'Q'")
        return TerminalPenalty.quadratic(cfg["Q"])
    if kind not in KINDS:
        raise InvalidInputError(f"unknown penalty kind {kind!r}")
    if ric is None:
        from .riccati import solve_are

        ric = solve_are(sys)
    if kind == "taylor2":
        return TerminalPenalty.taylor2(ric)
    if T3 is None:
        T3 = solve_cubic_term(sys, ric)
    return TerminalPenalty.taylor3(ric, T3)
