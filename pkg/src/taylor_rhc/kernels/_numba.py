"""Compiled kernels: explicit scalar loops, no temporaries inside the time loop.

Same signatures and results as ``_numpy`` up to floating-point reassociation.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _rhs(A, N, B, y, u, out):
    n = y.shape[0]
    for i in range(n):
        acc = 0.0
        bil = 0.0
        for j in range(n):
            acc += A[i, j] * y[j]
            bil += N[i, j] * y[j]
        out[i] = acc + (bil + B[i]) * u


@njit(cache=True, inline="always")
def _adj_rhs(At, Nt, CtC, p, y, u, out):
    n = p.shape[0]
    for i in range(n):
        acc = 0.0
        bil = 0.0
        obs = 0.0
        for j in range(n):
            acc += At[i, j] * p[j]
            bil += Nt[i, j] * p[j]
            obs += CtC[i, j] * y[j]
        out[i] = -(acc + bil * u) - obs


@njit(cache=True)
def rk4_forward(A, N, B, y0, ua, ub, h):
    m = ua.shape[0]
    n = y0.shape[0]
    Y = np.empty((m + 1, n))
    Ym = np.empty((m, n))
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    f1 = np.empty(n)
    z = np.empty(n)
    for i in range(n):
        Y[0, i] = y0[i]
    for k in range(m):
        y = Y[k]
        a = ua[k]
        b = ub[k]
        c = 0.5 * (a + b)
        _rhs(A, N, B, y, a, k1)
        for i in range(n):
            z[i] = y[i] + 0.5 * h * k1[i]
        _rhs(A, N, B, z, c, k2)
        for i in range(n):
            z[i] = y[i] + 0.5 * h * k2[i]
        _rhs(A, N, B, z, c, k3)
        for i in range(n):
            z[i] = y[i] + h * k3[i]
        _rhs(A, N, B, z, b, k4)
        y1 = Y[k + 1]
        finite = True
        for i in range(n):
            y1[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not np.isfinite(y1[i]):
                finite = False
        _rhs(A, N, B, y1, b, f1)
        for i in range(n):
            Ym[k, i] = 0.5 * (y[i] + y1[i]) + (h / 8.0) * (k1[i] - f1[i])
        if not finite:
            return Y, Ym, k + 1
    return Y, Ym, -1


@njit(cache=True)
def rk4_adjoint(At, Nt, CtC, Y, Ym, ua, ub, h, pT):
    m = ua.shape[0]
    n = pT.shape[0]
    P = np.empty((m + 1, n))
    Pm = np.empty((m, n))
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    g0 = np.empty(n)
    z = np.empty(n)
    for i in range(n):
        P[m, i] = pT[i]
    for k in range(m - 1, -1, -1):
        p = P[k + 1]
        a = ua[k]
        b = ub[k]
        c = 0.5 * (a + b)
        ym = Ym[k]
        _adj_rhs(At, Nt, CtC, p, Y[k + 1], b, k1)
        for i in range(n):
            z[i] = p[i] - 0.5 * h * k1[i]
        _adj_rhs(At, Nt, CtC, z, ym, c, k2)
        for i in range(n):
            z[i] = p[i] - 0.5 * h * k2[i]
        _adj_rhs(At, Nt, CtC, z, ym, c, k3)
        for i in range(n):
            z[i] = p[i] - h * k3[i]
        _adj_rhs(At, Nt, CtC, z, Y[k], a, k4)
        p0 = P[k]
        for i in range(n):
            p0[i] = p[i] - (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        _adj_rhs(At, Nt, CtC, p0, Y[k], a, g0)
        for i in range(n):
            Pm[k, i] = 0.5 * (p0[i] + p[i]) + (h / 8.0) * (g0[i] - k1[i])
    return P, Pm


@njit(cache=True, inline="always")
def _sq_out(C, y):
    acc = 0.0
    for r in range(C.shape[0]):
        s = 0.0
        for j in range(y.shape[0]):
            s += C[r, j] * y[j]
        acc += s * s
    return acc


@njit(cache=True)
def state_cost(C, Y, Ym, h):
    m = Ym.shape[0]
    total = 0.0
    ql = _sq_out(C, Y[0])
    for k in range(m):
        qr = _sq_out(C, Y[k + 1])
        total += ql + 4.0 * _sq_out(C, Ym[k]) + qr
        ql = qr
    return 0.5 * total * h / 6.0


@njit(cache=True, inline="always")
def _jac_t(A, N, u, v, out):
    # out = (A + uN)^T v
    n = v.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += (A[j, i] + u * N[j, i]) * v[j]
        out[i] = acc


@njit(cache=True, inline="always")
def _dot_input(N, B, v, z):
    # <v, N z + B>
    n = z.shape[0]
    acc = 0.0
    for i in range(n):
        s = B[i]
        for j in range(n):
            s += N[i, j] * z[j]
        acc += v[i] * s
    return acc


@njit(cache=True, inline="always")
def _matvec(M, v, out):
    n = v.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += M[i, j] * v[j]
        out[i] = acc


@njit(cache=True)
def cost_gradient(A, N, B, CtC, Y, Ym, ua, ub, h, alpha, gT):
    m = ua.shape[0]
    n = gT.shape[0]
    ga = np.empty(m)
    gb = np.empty(m)
    lam = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    z2 = np.empty(n)
    z3 = np.empty(n)
    z4 = np.empty(n)
    bym = np.empty(n)
    by = np.empty(n)
    by1 = np.empty(n)
    bk1 = np.empty(n)
    bk2 = np.empty(n)
    bk3 = np.empty(n)
    bk4 = np.empty(n)
    tmp = np.empty(n)
    w_node = h / 6.0
    _matvec(CtC, Y[m], tmp)
    for i in range(n):
        lam[i] = gT[i] + w_node * tmp[i]
    for k in range(m - 1, -1, -1):
        y = Y[k]
        y1 = Y[k + 1]
        a = ua[k]
        b = ub[k]
        c = 0.5 * (a + b)
        _rhs(A, N, B, y, a, k1)
        for i in range(n):
            z2[i] = y[i] + 0.5 * h * k1[i]
        _rhs(A, N, B, z2, c, k2)
        for i in range(n):
            z3[i] = y[i] + 0.5 * h * k2[i]
        _rhs(A, N, B, z3, c, k3)
        for i in range(n):
            z4[i] = y[i] + h * k3[i]

        _matvec(CtC, Ym[k], bym)
        for i in range(n):
            bym[i] *= 2.0 * h / 3.0
            by[i] = 0.5 * bym[i]
            by1[i] = lam[i] + 0.5 * bym[i]
            bk1[i] = (h / 8.0) * bym[i]
            tmp[i] = -(h / 8.0) * bym[i]
        bb = _dot_input(N, B, tmp, y1)
        _jac_t(A, N, b, tmp, bk4)
        for i in range(n):
            by1[i] += bk4[i]
        for i in range(n):
            by[i] += by1[i]
            bk1[i] += (h / 6.0) * by1[i]
            bk2[i] = (h / 3.0) * by1[i]
            bk3[i] = (h / 3.0) * by1[i]
            bk4[i] = (h / 6.0) * by1[i]
        bb += _dot_input(N, B, bk4, z4)
        _jac_t(A, N, b, bk4, tmp)
        for i in range(n):
            by[i] += tmp[i]
            bk3[i] += h * tmp[i]
        bc = _dot_input(N, B, bk3, z3)
        _jac_t(A, N, c, bk3, tmp)
        for i in range(n):
            by[i] += tmp[i]
            bk2[i] += 0.5 * h * tmp[i]
        bc += _dot_input(N, B, bk2, z2)
        _jac_t(A, N, c, bk2, tmp)
        for i in range(n):
            by[i] += tmp[i]
            bk1[i] += 0.5 * h * tmp[i]
        _jac_t(A, N, a, bk1, tmp)
        for i in range(n):
            by[i] += tmp[i]
        ba = _dot_input(N, B, bk1, y)

        ga[k] = ba + 0.5 * bc + alpha * h / 6.0 * (2.0 * a + b)
        gb[k] = bb + 0.5 * bc + alpha * h / 6.0 * (a + 2.0 * b)
        wk = 2.0 * w_node if k > 0 else w_node
        _matvec(CtC, y, tmp)
        for i in range(n):
            lam[i] = by[i] + wk * tmp[i]
    return ga, gb
