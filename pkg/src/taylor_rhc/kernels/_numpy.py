"""Reference kernels in plain numpy (vectorized within each time step).

Used when numba is disabled or missing, and as the oracle the compiled kernels
are tested against. Conventions are documented in the package ``__init__``.
"""

import numpy as np


def rk4_forward(A, N, B, y0, ua, ub, h):
    """Integrate y' = Ay + (Ny + B)u(t) over len(ua) steps.

    Returns node states (m+1, n), midpoint states (m, n) from the cubic
    Hermite interpolant of each step, and the first bad node or -1.
    """
    m = ua.shape[0]
    n = y0.shape[0]
    Y = np.empty((m + 1, n))
    Ym = np.empty((m, n))
    Y[0] = y0
    bad = -1
    for k in range(m):
        y = Y[k]
        a = ua[k]
        b = ub[k]
        c = 0.5 * (a + b)
        k1 = A @ y + (N @ y + B) * a
        z = y + 0.5 * h * k1
        k2 = A @ z + (N @ z + B) * c
        z = y + 0.5 * h * k2
        k3 = A @ z + (N @ z + B) * c
        z = y + h * k3
        k4 = A @ z + (N @ z + B) * b
        y1 = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        f1 = A @ y1 + (N @ y1 + B) * b
        Y[k + 1] = y1
        Ym[k] = 0.5 * (y + y1) + (h / 8.0) * (k1 - f1)
        if not np.all(np.isfinite(y1)):
            bad = k + 1
            break
    return Y, Ym, bad


def rk4_adjoint(At, Nt, CtC, Y, Ym, ua, ub, h, pT):
    """Integrate -p' = (A + uN)^T p + C^T C y backward from p(T) = pT.

    ``At`` and ``Nt`` are the transposed system matrices. The state at the
    RK4 stage times comes from the stored nodes and midpoints.
    """
    m = ua.shape[0]
    n = pT.shape[0]
    P = np.empty((m + 1, n))
    Pm = np.empty((m, n))
    P[m] = pT
    for k in range(m - 1, -1, -1):
        p = P[k + 1]
        a = ua[k]
        b = ub[k]
        c = 0.5 * (a + b)
        ym = Ym[k]
        k1 = -(At @ p + (Nt @ p) * b) - CtC @ Y[k + 1]
        z = p - 0.5 * h * k1
        k2 = -(At @ z + (Nt @ z) * c) - CtC @ ym
        z = p - 0.5 * h * k2
        k3 = -(At @ z + (Nt @ z) * c) - CtC @ ym
        z = p - h * k3
        k4 = -(At @ z + (Nt @ z) * a) - CtC @ Y[k]
        p0 = p - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        g0 = -(At @ p0 + (Nt @ p0) * a) - CtC @ Y[k]
        P[k] = p0
        Pm[k] = 0.5 * (p0 + p) + (h / 8.0) * (g0 - k1)
    return P, Pm


def state_cost(C, Y, Ym, h):
    """0.5 * int |Cy|^2 by Simpson's rule on every step (nodes + midpoint)."""
    m = Ym.shape[0]
    total = 0.0
    left = C @ Y[0]
    ql = left @ left
    for k in range(m):
        mid = C @ Ym[k]
        right = C @ Y[k + 1]
        qr = right @ right
        total += ql + 4.0 * (mid @ mid) + qr
        ql = qr
    return 0.5 * total * h / 6.0


def cost_gradient(A, N, B, CtC, Y, Ym, ua, ub, h, alpha, gT):
    """Exact gradient of the discrete cost with respect to (ua, ub).

    Reverse-mode pass through the RK4 step, the Hermite midpoint, Simpson's
    rule for the state cost and the exact control cost. ``gT`` is the
    gradient of the terminal penalty at Y[-1].
    """
    m = ua.shape[0]
    ga = np.empty(m)
    gb = np.empty(m)
    w_node = h / 6.0
    lam = gT + w_node * (CtC @ Y[m])
    for k in range(m - 1, -1, -1):
        y = Y[k]
        y1 = Y[k + 1]
        a = ua[k]
        b = ub[k]
        c = 0.5 * (a + b)
        Ja, Jb, Jc = A + a * N, A + b * N, A + c * N
        k1 = Ja @ y + B * a
        z2 = y + 0.5 * h * k1
        k2 = Jc @ z2 + B * c
        z3 = y + 0.5 * h * k2
        k3 = Jc @ z3 + B * c
        z4 = y + h * k3

        bym = (2.0 * h / 3.0) * (CtC @ Ym[k])
        by = 0.5 * bym
        by1 = lam + 0.5 * bym
        bk1 = (h / 8.0) * bym
        bf1 = -(h / 8.0) * bym
        by1 = by1 + Jb.T @ bf1
        bb = bf1 @ (N @ y1 + B)
        by = by + by1
        bk1 = bk1 + (h / 6.0) * by1
        bk2 = (h / 3.0) * by1
        bk3 = (h / 3.0) * by1
        bk4 = (h / 6.0) * by1
        bz4 = Jb.T @ bk4
        bb += bk4 @ (N @ z4 + B)
        by = by + bz4
        bk3 = bk3 + h * bz4
        bz3 = Jc.T @ bk3
        bc = bk3 @ (N @ z3 + B)
        by = by + bz3
        bk2 = bk2 + 0.5 * h * bz3
        bz2 = Jc.T @ bk2
        bc += bk2 @ (N @ z2 + B)
        by = by + bz2
        bk1 = bk1 + 0.5 * h * bz2
        by = by + Ja.T @ bk1
        ba = bk1 @ (N @ y + B)

        ga[k] = ba + 0.5 * bc + alpha * h / 6.0 * (2.0 * a + b)
        gb[k] = bb + 0.5 * bc + alpha * h / 6.0 * (a + 2.0 * b)
        lam = by + (2.0 if k > 0 else 1.0) * w_node * (CtC @ y)
    return ga, gb
