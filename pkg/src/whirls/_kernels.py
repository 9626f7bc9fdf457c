"""Hot kernels with numba and pure-numpy implementations.

Set WHIRLS_DISABLE_NUMBA=1 (before import) to force the numpy path.  Both
paths are always importable as ``*_numpy`` and, when numba is present,
``*_numba`` so tests and benchmarks can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("WHIRLS_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# whirl jet: u, grad u, lap u, grad |grad u|^2 from Q-block formulas
#
# Inputs per point: x (n,), f (d,), df (d, N), d2f (d, N, N).
# Q = blockdiag(R[f_i]) (+1 for odd n); dQ_l = Q blockdiag(df_il J);
# d2Q_lk = Q blockdiag(d2f_ilk J - df_il df_ik I).

def _frame_numpy(x, n, d, N):
    P = x.shape[0]
    y = np.empty((P, N))
    gy = np.zeros((P, N, n))
    hy = np.zeros((P, N, n, n))
    ly = np.zeros((P, N))
    for l in range(d):
        a, b = x[:, 2 * l], x[:, 2 * l + 1]
        yl = np.hypot(a, b)
        y[:, l] = yl
        gy[:, l, 2 * l] = a / yl
        gy[:, l, 2 * l + 1] = b / yl
        e = gy[:, l, 2 * l: 2 * l + 2]
        blk = (np.eye(2)[None] - e[:, :, None] * e[:, None, :]) / yl[:, None, None]
        hy[:, l, 2 * l: 2 * l + 2, 2 * l: 2 * l + 2] = blk
        ly[:, l] = 1.0 / yl
    if N > d:
        y[:, N - 1] = x[:, n - 1]
        gy[:, N - 1, n - 1] = 1.0
    return y, gy, hy, ly


def q_fields_numpy(f, df, d2f, n, d, N):
    """Q (P,n,n), dQ (P,N,n,n), d2Q (P,N,N,n,n) from the block formulas."""
    P = f.shape[0]
    Q = np.zeros((P, n, n))
    dQ = np.zeros((P, N, n, n))
    d2Q = np.zeros((P, N, N, n, n))
    for i in range(d):
        c, s = np.cos(f[:, i]), np.sin(f[:, i])
        R = np.empty((P, 2, 2))
        R[:, 0, 0], R[:, 0, 1], R[:, 1, 0], R[:, 1, 1] = c, -s, s, c
        RJ = np.empty((P, 2, 2))  # R J with J = [[0, -1], [1, 0]]
        RJ[:, 0, 0], RJ[:, 0, 1], RJ[:, 1, 0], RJ[:, 1, 1] = -s, -c, c, -s
        sl = slice(2 * i, 2 * i + 2)
        Q[:, sl, sl] = R
        g = df[:, i, :]
        dQ[:, :, sl, sl] = g[:, :, None, None] * RJ[:, None]
        h = d2f[:, i, :, :]
        gg = g[:, :, None] * g[:, None, :]
        d2Q[:, :, :, sl, sl] = h[..., None, None] * RJ[:, None, None] - gg[..., None, None] * R[:, None, None]
    if n % 2 == 1:
        Q[:, n - 1, n - 1] = 1.0
    return Q, dQ, d2Q


def whirl_jet_numpy(x, f, df, d2f, n, d, N):
    x = np.ascontiguousarray(x, dtype=float)
    y, gy, hy, ly = _frame_numpy(x, n, d, N)
    Q, dQ, d2Q = q_fields_numpy(f, df, d2f, n, d, N)
    u = np.einsum("pij,pj->pi", Q, x)
    dQx = np.einsum("plij,pj->pli", dQ, x)                 # (P,N,n)
    d2Qx = np.einsum("plkij,pj->plki", d2Q, x)             # (P,N,N,n)
    grad_u = Q + np.einsum("pli,plj->pij", dQx, gy)
    diag = np.einsum("pllj->plj", d2Qx)
    lap_u = (diag.sum(axis=1) + np.einsum("pl,pli->pi", ly, dQx)
             + 2.0 * np.einsum("plij,plj->pi", dQ, gy))
    QtdQx = np.einsum("pji,plj->pli", Q, dQx)              # Q^t dQ_l x
    t1 = np.einsum("plji,pjk,plk->pi", dQ, Q, gy)          # dQ_l^t Q grad y_l
    t2 = np.einsum("plij,plj->pi", hy, QtdQx)              # hess y_l Q^t dQ_l x
    t3 = np.einsum("plji,plj->pi", dQ, dQx)                # dQ_l^t dQ_l x
    # scalar coefficients of grad y_k
    A1 = np.einsum("pkmi,plm,pli->plk", dQ, dQx, gy)       # <dQ_k^t dQ_l x, grad y_l>
    A2 = np.einsum("pmi,plkm,pli->plk", Q, d2Qx, gy)       # <Q^t d2Q_lk x, grad y_l>
    A3 = np.einsum("plki,pli->plk", d2Qx, dQx)             # <d2Q_lk x, dQ_l x>
    coef = (A1 + A2 + A3).sum(axis=1)
    grad_xi = 2.0 * (t1 + t2 + t3) + 2.0 * np.einsum("pk,pki->pi", coef, gy)
    return u, grad_u, lap_u, grad_xi


def _whirl_jet_loop(x, f, df, d2f, n, d, N):
    # scalar loops over preallocated scratch: no per-point allocation, no tiny BLAS calls
    P = x.shape[0]
    u_out = np.zeros((P, n))
    gu_out = np.zeros((P, n, n))
    lap_out = np.zeros((P, n))
    gxi_out = np.zeros((P, n))
    gy = np.zeros((N, n))
    hy = np.zeros((N, n, n))
    ly = np.zeros(N)
    Q = np.zeros((n, n))
    dQ = np.zeros((N, n, n))
    d2Q = np.zeros((N, N, n, n))
    dQx = np.zeros((N, n))
    d2Qx = np.zeros(n)
    w1 = np.zeros(n)
    w2 = np.zeros(n)
    for p in range(P):
        gy[:] = 0.0
        hy[:] = 0.0
        ly[:] = 0.0
        Q[:] = 0.0
        dQ[:] = 0.0
        d2Q[:] = 0.0
        for l in range(d):
            a = x[p, 2 * l]
            b = x[p, 2 * l + 1]
            yl = np.sqrt(a * a + b * b)
            e0 = a / yl
            e1 = b / yl
            gy[l, 2 * l] = e0
            gy[l, 2 * l + 1] = e1
            hy[l, 2 * l, 2 * l] = (1.0 - e0 * e0) / yl
            hy[l, 2 * l, 2 * l + 1] = -e0 * e1 / yl
            hy[l, 2 * l + 1, 2 * l] = -e0 * e1 / yl
            hy[l, 2 * l + 1, 2 * l + 1] = (1.0 - e1 * e1) / yl
            ly[l] = 1.0 / yl
        if N > d:
            gy[N - 1, n - 1] = 1.0
        for i in range(d):
            c = np.cos(f[p, i])
            s = np.sin(f[p, i])
            j0 = 2 * i
            Q[j0, j0] = c
            Q[j0, j0 + 1] = -s
            Q[j0 + 1, j0] = s
            Q[j0 + 1, j0 + 1] = c
            for l in range(N):
                g = df[p, i, l]
                dQ[l, j0, j0] = -s * g
                dQ[l, j0, j0 + 1] = -c * g
                dQ[l, j0 + 1, j0] = c * g
                dQ[l, j0 + 1, j0 + 1] = -s * g
                for k in range(N):
                    h = d2f[p, i, l, k]
                    gg = g * df[p, i, k]
                    d2Q[l, k, j0, j0] = -s * h - c * gg
                    d2Q[l, k, j0, j0 + 1] = -c * h + s * gg
                    d2Q[l, k, j0 + 1, j0] = c * h - s * gg
                    d2Q[l, k, j0 + 1, j0 + 1] = -s * h - c * gg
        if n % 2 == 1:
            Q[n - 1, n - 1] = 1.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += Q[i, j] * x[p, j]
            u_out[p, i] = acc
        for l in range(N):
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += dQ[l, i, j] * x[p, j]
                dQx[l, i] = acc
        for i in range(n):
            for j in range(n):
                acc = Q[i, j]
                for l in range(N):
                    acc += dQx[l, i] * gy[l, j]
                gu_out[p, i, j] = acc
        for i in range(n):
            acc = 0.0
            for l in range(N):
                acc += ly[l] * dQx[l, i]
                for j in range(n):
                    acc += d2Q[l, l, i, j] * x[p, j] + 2.0 * dQ[l, i, j] * gy[l, j]
            lap_out[p, i] = acc
        for i in range(n):
            gxi_out[p, i] = 0.0
        for l in range(N):
            # w1 = Q grad y_l, w2 = Q^t dQ_l x
            for i in range(n):
                a1 = 0.0
                a2 = 0.0
                for j in range(n):
                    a1 += Q[i, j] * gy[l, j]
                    a2 += Q[j, i] * dQx[l, j]
                w1[i] = a1
                w2[i] = a2
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += dQ[l, j, i] * (w1[j] + dQx[l, j]) + hy[l, i, j] * w2[j]
                gxi_out[p, i] += 2.0 * acc
            for k in range(N):
                for i in range(n):
                    acc = 0.0
                    for j in range(n):
                        acc += d2Q[l, k, i, j] * x[p, j]
                    d2Qx[i] = acc
                coef = 0.0
                for i in range(n):
                    t = 0.0
                    for j in range(n):
                        t += (dQ[k, j, i] * dQx[l, j] + Q[j, i] * d2Qx[j])
                    coef += t * gy[l, i] + d2Qx[i] * dQx[l, i]
                for i in range(n):
                    gxi_out[p, i] += 2.0 * coef * gy[k, i]
    return u_out, gu_out, lap_out, gxi_out


# ---------------------------------------------------------------------------
# divergence-free bump field and its flow
#
# Psi = beta(y) P(y) with P = K + sum_k (y - c)_k L[k] skew; v_i = sum_j d_j Psi_ij.

def bump_field_numpy(y, c, R, amp, K, L):
    y = np.asarray(y, dtype=float)
    dy = y - c
    s = np.einsum("pi,pi->p", dy, dy) / (R * R)
    inside = s < 1.0
    om = np.where(inside, 1.0 - s, 1.0)
    g = np.where(inside, np.exp(-1.0 / om), 0.0)
    g1 = -g / om ** 2
    g2 = g * (2 * s - 1) / om ** 4
    q = 2.0 * dy / (R * R)
    gb = amp * g1[:, None] * q
    hb = amp * (g2[:, None, None] * q[:, :, None] * q[:, None, :]
                + g1[:, None, None] * (2.0 / (R * R)) * np.eye(y.shape[1])[None])
    Pm = K[None] + np.einsum("pk,kij->pij", dy, L)
    beta = amp * g
    # v_i = sum_j [d_j beta P_ij + beta L[j]_ij]
    trL = np.einsum("jij->i", L)
    v = np.einsum("pj,pij->pi", gb, Pm) + beta[:, None] * trL[None]
    # dv_i/dy_k = sum_j [H_jk P_ij + g_j L[k]_ij + g_k L[j]_ij]
    dv = (np.einsum("pjk,pij->pik", hb, Pm) + np.einsum("pj,kij->pik", gb, L)
          + gb[:, None, :] * trL[None, :, None])
    return v, dv


def flow_numpy(y0, t, steps, c, R, amp, K, L):
    """Fixed-step RK4 for y' = v(y) together with F' = grad v(y) F."""
    y = np.array(y0, dtype=float)
    P, n = y.shape
    F = np.broadcast_to(np.eye(n), (P, n, n)).copy()
    h = t / steps

    def rhs(y, F):
        v, dv = bump_field_numpy(y, c, R, amp, K, L)
        return v, dv @ F

    for _ in range(steps):
        k1, K1 = rhs(y, F)
        k2, K2 = rhs(y + 0.5 * h * k1, F + 0.5 * h * K1)
        k3, K3 = rhs(y + 0.5 * h * k2, F + 0.5 * h * K2)
        k4, K4 = rhs(y + h * k3, F + h * K3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        F = F + (h / 6.0) * (K1 + 2 * K2 + 2 * K3 + K4)
    return y, F


if HAVE_NUMBA:
    whirl_jet_numba = njit(cache=True)(_whirl_jet_loop)

    # one function with the bump evaluated in place; a helper call per stage costs more than its arithmetic
    @njit(cache=True)
    def _flow_numba_impl(y0, t, steps, c, R, amp, K, L):
        P, n = y0.shape
        yout = np.empty((P, n))
        Fout = np.empty((P, n, n))
        h = t / steps
        R2 = R * R
        dv = np.empty((n, n))
        q = np.empty(n)
        Pm = np.empty((n, n))
        ys = np.empty(n)
        Fs = np.empty((n, n))
        ky = np.zeros((4, n))
        kF = np.zeros((4, n, n))
        trL = np.zeros(n)
        for i in range(n):
            for j in range(n):
                trL[i] += L[j, i, j]
        y = np.empty(n)
        F = np.empty((n, n))
        frac = (0.0, 0.5, 0.5, 1.0)
        for p in range(P):
            for i in range(n):
                y[i] = y0[p, i]
                for j in range(n):
                    F[i, j] = 1.0 if i == j else 0.0
            for _ in range(steps):
                for st in range(4):
                    a = frac[st] * h
                    if st == 0:
                        for i in range(n):
                            ys[i] = y[i]
                            for j in range(n):
                                Fs[i, j] = F[i, j]
                    else:
                        for i in range(n):
                            ys[i] = y[i] + a * ky[st - 1, i]
                            for j in range(n):
                                Fs[i, j] = F[i, j] + a * kF[st - 1, i, j]
                    s = 0.0
                    for i in range(n):
                        dd = ys[i] - c[i]
                        s += dd * dd
                    s /= R2
                    if s >= 1.0:
                        for i in range(n):
                            ky[st, i] = 0.0
                            for j in range(n):
                                kF[st, i, j] = 0.0
                        continue
                    om = 1.0 - s
                    g = amp * np.exp(-1.0 / om)
                    g1 = -g / (om * om)
                    g2 = g * (2 * s - 1) / (om * om * om * om)
                    for i in range(n):
                        q[i] = 2.0 * (ys[i] - c[i]) / R2
                    for i in range(n):
                        for j in range(n):
                            acc = K[i, j]
                            for k in range(n):
                                acc += (ys[k] - c[k]) * L[k, i, j]
                            Pm[i, j] = acc
                    for i in range(n):
                        acc = g * trL[i]
                        for j in range(n):
                            acc += g1 * q[j] * Pm[i, j]
                        ky[st, i] = acc
                    for i in range(n):
                        for k in range(n):
                            acc = g1 * q[k] * trL[i]
                            for j in range(n):
                                hh = g2 * q[j] * q[k]
                                if j == k:
                                    hh += g1 * 2.0 / R2
                                acc += hh * Pm[i, j] + g1 * q[j] * L[k, i, j]
                            dv[i, k] = acc
                    for i in range(n):
                        for j in range(n):
                            acc = 0.0
                            for k in range(n):
                                acc += dv[i, k] * Fs[k, j]
                            kF[st, i, j] = acc
                for i in range(n):
                    y[i] += (h / 6.0) * (ky[0, i] + 2 * ky[1, i] + 2 * ky[2, i] + ky[3, i])
                    for j in range(n):
                        F[i, j] += (h / 6.0) * (kF[0, i, j] + 2 * kF[1, i, j] + 2 * kF[2, i, j] + kF[3, i, j])
            for i in range(n):
                yout[p, i] = y[i]
                for j in range(n):
                    Fout[p, i, j] = F[i, j]
        return yout, Fout

    def flow_numba(y0, t, steps, c, R, amp, K, L):
        return _flow_numba_impl(np.ascontiguousarray(y0, dtype=float), float(t), int(steps),
                                np.ascontiguousarray(c, dtype=float), float(R), float(amp),
                                np.ascontiguousarray(K, dtype=float), np.ascontiguousarray(L, dtype=float))

    def _jet_numba(x, f, df, d2f, n, d, N):
        return whirl_jet_numba(np.ascontiguousarray(x, dtype=float), np.ascontiguousarray(f, dtype=float),
                               np.ascontiguousarray(df, dtype=float), np.ascontiguousarray(d2f, dtype=float),
                               n, d, N)
else:  # pragma: no cover
    whirl_jet_numba = None
    flow_numba = None
    _jet_numba = None


def whirl_jet(x, f, df, d2f, n, d, N):
    if USE_NUMBA:
        return _jet_numba(x, f, df, d2f, n, d, N)
    return whirl_jet_numpy(x, f, df, d2f, n, d, N)


def flow(y0, t, steps, c, R, amp, K, L):
    if USE_NUMBA:
        return flow_numba(y0, t, steps, c, R, amp, K, L)
    return flow_numpy(y0, t, steps, c, R, amp, K, L)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
