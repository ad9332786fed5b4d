"""Algebraic Riccati equation, closed loop, and decay rate.

Newton-Kleinman iteration: each step solves a Lyapunov equation for the cost of
the current feedback and updates the gain from it. Lyapunov equations are small
and solved by Kronecker vectorization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateSpectrumError, NoStabilizingSolutionError, NumericalError
from .model import BilinearSystem, validate_system

log = logging.getLogger(__name__)

__all__ = ["RiccatiSolution", "solve_are", "solve_lyapunov", "spectral_abscissa", "are_residual"]

ARE_RTOL = 1e-10
MAX_NEWTON_ITERS = 100


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    Pi: np.ndarray
    A_pi: np.ndarray
    lam: float
    residual: float
    gain: np.ndarray
    iterations: int = 0


def spectral_abscissa(M) -> float:
    """Largest real part of the eigenvalues of M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue computation failed: {exc}") from exc
    return float(np.max(ev.real))


def solve_lyapunov(M, RHS) -> np.ndarray:
    """Solve M^T X + X M + RHS = 0 by dense LU on the Kronecker form."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    RHS = np.atleast_2d(np.asarray(RHS, dtype=float))
    n = M.shape[0]
    eye = np.eye(n)
    # row-major vec: vec(M^T X) = (M^T kron I) vec X, vec(X M) = (I kron M^T) vec X
    K = np.kron(M.T, eye) + np.kron(eye, M.T)
    try:
        x = np.linalg.solve(K, -RHS.reshape(-1))
    except np.linalg.LinAlgError:
        raise DegenerateSpectrumError("Lyapunov operator is singular (eigenvalues of M sum to zero)") from None
    # LAPACK may return garbage instead of raising on near-singular systems
    if not np.all(np.isfinite(x)) or np.linalg.cond(K) > 1e14:
        raise DegenerateSpectrumError("Lyapunov operator is numerically singular")
    X = x.reshape(n, n)
    if np.allclose(RHS, RHS.T, rtol=0.0, atol=0.0):
        X = 0.5 * (X + X.T)
    return X


def are_residual(sys: BilinearSystem, Pi) -> float:
    """Frobenius norm of A^T Pi + Pi A + C^T C - (1/alpha) Pi B B^T Pi."""
    A, C = sys.A, sys.C
    PB = Pi @ sys.B
    R = A.T @ Pi + Pi @ A + C.T @ C - np.outer(PB, PB) / sys.alpha
    return float(np.linalg.norm(R, "fro"))


def _initial_gain(sys: BilinearSystem) -> np.ndarray:
    """A stabilizing feedback u = -K y to start the Newton iteration."""
    A, B = sys.A, sys.B
    n = sys.n
    if spectral_abscissa(A) < 0.0:
        return np.zeros(n)
    # Bass' method: shift -A until stable, then its controllability Gramian
    # yields a stabilizing gain.
    beta = 1.0 + np.max(np.abs(np.linalg.eigvals(A)))
    As = -(A + beta * np.eye(n))
    X = solve_lyapunov(As.T, 2.0 * np.outer(B, B))
    K = B @ np.linalg.pinv(X, rcond=1e-12)
    if spectral_abscissa(A - np.outer(B, K)) < 0.0:
        return K
    raise NoStabilizingSolutionError("could not construct an initial stabilizing feedback")


def solve_are(sys: BilinearSystem) -> RiccatiSolution:
    """Stabilizing solution of A^T Pi + Pi A + C^T C - (1/alpha) Pi B B^T Pi = 0."""
    report = validate_system(sys)
    if not report.stabilizable:
        mu = report.uncontrollable_eigenvalues[0]
        raise NoStabilizingSolutionError(
            f"(A, B) is not stabilizable: PBH test fails at eigenvalue {mu:.6g}", eigenvalue=mu
        )
    if not report.detectable:
        log.warning("(A, C) is not detectable; the stabilizing solution may not exist")

    A, B, C, alpha = sys.A, sys.B, sys.C, sys.alpha
    CtC = C.T @ C
    K = _initial_gain(sys)
    Pi = np.zeros_like(A)
    residual = np.inf
    for it in range(1, MAX_NEWTON_ITERS + 1):
        Ak = A - np.outer(B, K)
        Pi = solve_lyapunov(Ak, CtC + alpha * np.outer(K, K))
        K = B @ Pi / alpha
        residual = are_residual(sys, Pi)
        log.debug("newton-kleinman iter %d residual %.3e", it, residual)
        if not np.isfinite(residual):
            raise ConvergenceError("Newton-Kleinman produced a non-finite iterate", residual=residual)
        if residual <= ARE_RTOL * max(1.0, np.linalg.norm(Pi, "fro")):
            break
    else:
        raise ConvergenceError(f"Newton-Kleinman hit {MAX_NEWTON_ITERS} iterations, residual {residual:.3e}",
                               residual=residual)

    A_pi = A - np.outer(B, B @ Pi) / alpha
    lam = -spectral_abscissa(A_pi)
    if not lam > 0.0:
        raise NoStabilizingSolutionError(f"closed loop is not exponentially stable (rate {lam:.3g})")
    return RiccatiSolution(Pi=Pi, A_pi=A_pi, lam=lam, residual=residual, gain=B @ Pi / alpha, iterations=it)
