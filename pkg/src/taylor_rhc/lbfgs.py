"""Limited-memory BFGS in a weighted inner product.

Minimizes f over R^m where the natural inner product is <a, b>_M = a^T M b.
``grad`` returns the Euclidean gradient; ``riesz`` applies M^{-1}, so the
Riesz representer of the gradient is ``riesz(grad)`` and the stopping norm is
sqrt(grad^T M^{-1} grad). The two-loop recursion starts from gamma * M^{-1}.

Near a minimizer the cost differences drop below floating-point resolution
long before the gradient reaches tolerances like 1e-12, so the Armijo test
allows an increase of ``noise`` (a few ulps of the current cost).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 60
COST_NOISE = 1e-14


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool
    message: str
    history: list = field(default_factory=list)


def minimize(fun, grad, x0, riesz, *, tol=1e-12, max_iters=5000, memory=10, gamma0=1.0):
    """Run L-BFGS from x0.

    ``fun(x)`` returns the cost (``inf`` signals an infeasible trial point);
    ``grad(x)`` returns the Euclidean gradient at the most recently accepted x.
    """
    x = np.array(x0, dtype=float)
    f = fun(x)
    if not math.isfinite(f):
        raise FloatingPointError("cost is not finite at the initial point")
    g = grad(x)
    r = riesz(g)
    gnorm = math.sqrt(max(float(g @ r), 0.0))
    pairs = deque(maxlen=memory)
    gamma = gamma0
    history = [f]
    f0 = abs(f)

    it = 0
    while True:
        if gnorm <= tol:
            return LbfgsResult(x, f, g, gnorm, it, True, "gradient tolerance reached", history)
        if it >= max_iters:
            return LbfgsResult(x, f, g, gnorm, it, False, "iteration cap reached", history)
        it += 1

        d = _two_loop(g, pairs, riesz, gamma)
        slope = float(g @ d)
        if not slope < 0.0:
            pairs.clear()
            d = -gamma * r
            slope = float(g @ d)

        noise = COST_NOISE * max(abs(f), f0)
        t = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            x_try = x + t * d
            f_try = fun(x_try)
            if math.isfinite(f_try) and f_try <= f + ARMIJO_C1 * t * slope + noise:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if pairs:
                # stale curvature information; restart from a scaled gradient step
                pairs.clear()
                continue
            return LbfgsResult(x, f, g, gnorm, it, False, "line search failed", history)

        g_new = grad(x_try)
        s = x_try - x
        yv = g_new - g
        sy = float(s @ yv)
        if sy > 1e-16 * math.sqrt(float(s @ s) * float(yv @ yv)) and sy > 0.0:
            pairs.append((s, yv, 1.0 / sy))
            ry = riesz(yv)
            gamma = sy / float(yv @ ry)
        x, f, g = x_try, f_try, g_new
        r = riesz(g)
        gnorm = math.sqrt(max(float(g @ r), 0.0))
        history.append(f)


def _two_loop(g, pairs, riesz, gamma):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    z = gamma * riesz(q)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ z)
        z += (a - b) * s
    return -z
