"""Numba-jitted implementation of the optimizer kernels.

Mirrors ``numpy_impl`` function for function (same signatures, same
semantics); parity is enforced by tests.  The brute-force mesh sweep and the
Adam loop are the hot paths, so both run entirely inside nopython code.
"""

from __future__ import annotations

import numpy as np
from numba import njit

EPS = 1e-18
LN2 = 0.6931471805599453


@njit(cache=True)
def _log2(v):
    if v < EPS:
        v = EPS
    return np.log(v) / LN2


@njit(cache=True)
def _xlog2x(v):
    if v <= EPS:
        return 0.0
    return v * np.log(v) / LN2


@njit(cache=True)
def _eigvals_herm(mat, out):
    """Eigenvalues of one Hermitian matrix; closed forms for d = 2, 3."""
    d = mat.shape[0]
    if d == 2:
        a = mat[0, 0].real
        c = mat[1, 1].real
        b2 = mat[0, 1].real ** 2 + mat[0, 1].imag ** 2
        half = 0.5 * (a + c)
        disc = np.sqrt(0.25 * (a - c) ** 2 + b2)
        out[0] = half - disc
        out[1] = half + disc
    elif d == 3:
        tr = mat[0, 0].real + mat[1, 1].real + mat[2, 2].real
        q = tr / 3.0
        p2 = 0.0
        for i in range(3):
            for j in range(3):
                bij = mat[i, j]
                if i == j:
                    bij = bij - q
                p2 += (bij.real ** 2 + bij.imag ** 2) / 6.0
        p = np.sqrt(p2) if p2 > 0.0 else 0.0
        if p <= 1e-30:
            out[0] = q
            out[1] = q
            out[2] = q
        else:
            c00 = (mat[0, 0] - q) / p
            c11 = (mat[1, 1] - q) / p
            c22 = (mat[2, 2] - q) / p
            c01 = mat[0, 1] / p
            c02 = mat[0, 2] / p
            c12 = mat[1, 2] / p
            det = (
                c00 * (c11 * c22 - c12 * np.conj(c12))
                - c01 * (np.conj(c01) * c22 - c12 * np.conj(c02))
                + c02 * (np.conj(c01) * np.conj(c12) - c11 * np.conj(c02))
            ).real
            r = det / 2.0
            if r < -1.0:
                r = -1.0
            elif r > 1.0:
                r = 1.0
            phi = np.arccos(r) / 3.0
            for k in range(3):
                out[k] = q + 2.0 * p * np.cos(phi + 2.0 * np.pi * k / 3.0)
    else:
        w = np.linalg.eigvalsh(mat)
        for k in range(d):
            out[k] = w[k]


@njit(cache=True)
def softmax_rows(theta):
    nx, nu = theta.shape
    q = np.empty((nx, nu))
    for x in range(nx):
        mx = theta[x, 0]
        for u in range(1, nu):
            if theta[x, u] > mx:
                mx = theta[x, u]
        s = 0.0
        for u in range(nu):
            q[x, u] = np.exp(theta[x, u] - mx)
            s += q[x, u]
        for u in range(nu):
            q[x, u] /= s
    return q


@njit(cache=True)
def avg_state_entropy(px, rhos):
    nx, d = rhos.shape[0], rhos.shape[1]
    rbar = np.zeros((d, d), dtype=np.complex128)
    for x in range(nx):
        rbar += px[x] * rhos[x]
    w = np.empty(d)
    _eigvals_herm(rbar, w)
    h = 0.0
    for k in range(d):
        lam = w[k]
        if lam > 1.0:
            lam = 1.0
        if lam > 0.0:
            h -= _xlog2x(lam)
    return h


@njit(cache=True)
def mutual_infos(px, rhos, Q):
    nx, nu = Q.shape
    d = rhos.shape[1]
    pu = np.zeros(nu)
    for x in range(nx):
        for u in range(nu):
            pu[u] += px[x] * Q[x, u]
    iux = 0.0
    for x in range(nx):
        for u in range(nu):
            j = px[x] * Q[x, u]
            if j > 0.0 and pu[u] > 0.0:
                iux += j * (_log2(j) - _log2(px[x] * pu[u]))
    sig = np.zeros((nu, d, d), dtype=np.complex128)
    for x in range(nx):
        for u in range(nu):
            c = px[x] * Q[x, u]
            if c > 0.0:
                for i in range(d):
                    for j2 in range(d):
                        sig[u, i, j2] += c * rhos[x, i, j2]
    iuq = avg_state_entropy(px, rhos)
    w = np.empty(d)
    for u in range(nu):
        _eigvals_herm(sig[u], w)
        for k in range(d):
            if w[k] > 0.0:
                iuq += _xlog2x(w[k])
        if pu[u] > 0.0:
            iuq -= _xlog2x(pu[u])
    if iuq < 0.0:
        iuq = 0.0
    return iux, iuq


@njit(cache=True)
def rate_gain(px, rhos, Q):
    iux, iuq = mutual_infos(px, rhos, Q)
    return iux - iuq, iuq


@njit(cache=True)
def objective_grad(theta, px, rhos, a, b, mu, nu, rt):
    nx, nu_size = theta.shape
    d = rhos.shape[1]
    Q = softmax_rows(theta)
    joint = np.empty((nx, nu_size))
    pu = np.zeros(nu_size)
    for x in range(nx):
        for u in range(nu_size):
            joint[x, u] = px[x] * Q[x, u]
            pu[u] += joint[x, u]
    log_pu = np.empty(nu_size)
    for u in range(nu_size):
        log_pu[u] = _log2(pu[u])

    iux = 0.0
    g_x = np.empty((nx, nu_size))
    for x in range(nx):
        for u in range(nu_size):
            lq = _log2(Q[x, u])
            iux += joint[x, u] * (lq - log_pu[u])
            g_x[x, u] = px[x] * (lq - log_pu[u])

    sig = np.zeros((nu_size, d, d), dtype=np.complex128)
    for x in range(nx):
        for u in range(nu_size):
            c = joint[x, u]
            for i in range(d):
                for j2 in range(d):
                    sig[u, i, j2] += c * rhos[x, i, j2]

    iuq = avg_state_entropy(px, rhos)
    g_q = np.empty((nx, nu_size))
    log_sig = np.empty((d, d), dtype=np.complex128)
    for u in range(nu_size):
        lam, vec = np.linalg.eigh(sig[u])
        for k in range(d):
            if lam[k] > 0.0:
                iuq += _xlog2x(lam[k])
        iuq -= _xlog2x(pu[u])
        for i in range(d):
            for j2 in range(d):
                acc = 0.0 + 0.0j
                for k in range(d):
                    acc += vec[i, k] * _log2(max(lam[k], 0.0)) * np.conj(vec[j2, k])
                log_sig[i, j2] = acc
        for x in range(nx):
            tr = 0.0
            for i in range(d):
                for j2 in range(d):
                    tr += (rhos[x, i, j2] * log_sig[j2, i]).real
            g_q[x, u] = px[x] * (tr - log_pu[u])

    rate = iux - iuq
    val = a * iuq - b * iux
    g = np.empty((nx, nu_size))
    for x in range(nx):
        for u in range(nu_size):
            g[x, u] = a * g_q[x, u] - b * g_x[x, u]
    if mu != 0.0 and rate > rt:
        val -= mu * (rate - rt) ** 2
        for x in range(nx):
            for u in range(nu_size):
                g[x, u] -= 2.0 * mu * (rate - rt) * (g_x[x, u] - g_q[x, u])
    if nu != 0.0:
        val -= nu * (iux - rt) ** 2
        for x in range(nx):
            for u in range(nu_size):
                g[x, u] -= 2.0 * nu * (iux - rt) * g_x[x, u]

    grad = np.empty((nx, nu_size))
    for x in range(nx):
        inner = 0.0
        for u in range(nu_size):
            inner += Q[x, u] * g[x, u]
        for u in range(nu_size):
            grad[x, u] = Q[x, u] * (g[x, u] - inner)
    return val, grad


@njit(cache=True)
def adam_opt(theta0, px, rhos, a, b, mu, nu, rt, lr, max_iter, rel_tol, patience):
    theta = theta0.copy()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2, eps = 0.9, 0.999, 1e-8
    best_val = -1e300
    best_theta = theta.copy()
    stale = 0
    for t in range(1, max_iter + 1):
        val, grad = objective_grad(theta, px, rhos, a, b, mu, nu, rt)
        if val > best_val + rel_tol * (abs(val) + 1.0):
            best_val = val
            best_theta = theta.copy()
            stale = 0
        else:
            if val > best_val:
                best_val = val
                best_theta = theta.copy()
            stale += 1
            if stale >= patience:
                break
        bc1 = 1.0 - b1 ** t
        bc2 = 1.0 - b2 ** t
        for x in range(theta.shape[0]):
            for u in range(theta.shape[1]):
                m[x, u] = b1 * m[x, u] + (1 - b1) * grad[x, u]
                v[x, u] = b2 * v[x, u] + (1 - b2) * grad[x, u] * grad[x, u]
                theta[x, u] += lr * (m[x, u] / bc1) / (np.sqrt(v[x, u] / bc2) + eps)
    return best_theta, best_val


@njit(cache=True)
def brute_sweep(px, rhos, rows, r_list, tol):
    nx = px.shape[0]
    nu = rows.shape[1]
    d = rhos.shape[1]
    n_comp = rows.shape[0]
    n_r = r_list.shape[0]
    best_gain = np.full(n_r, -1.0)
    best_idx = np.full((n_r, nx), -1, dtype=np.int64)
    h_bar = avg_state_entropy(px, rhos)

    counters = np.zeros(nx, dtype=np.int64)
    sig = np.empty((nu, d, d), dtype=np.complex128)
    pu = np.empty(nu)
    w = np.empty(d)
    total = 1
    for _ in range(nx):
        total *= n_comp
    for _step in range(total):
        for u in range(nu):
            pu[u] = 0.0
            for i in range(d):
                for j in range(d):
                    sig[u, i, j] = 0.0
        iux = 0.0
        for x in range(nx):
            row = rows[counters[x]]
            for u in range(nu):
                c = px[x] * row[u]
                pu[u] += c
                if c > 0.0:
                    for i in range(d):
                        for j in range(d):
                            sig[u, i, j] += c * rhos[x, i, j]
        for x in range(nx):
            row = rows[counters[x]]
            for u in range(nu):
                c = px[x] * row[u]
                if c > 0.0 and pu[u] > 0.0:
                    iux += c * (_log2(c) - _log2(px[x] * pu[u]))
        iuq = h_bar
        for u in range(nu):
            if pu[u] > 0.0:
                _eigvals_herm(sig[u], w)
                for k in range(d):
                    if w[k] > 0.0:
                        iuq += _xlog2x(w[k])
                iuq -= _xlog2x(pu[u])
        rate = iux - iuq
        for k in range(n_r):
            if rate <= r_list[k] + tol and iuq > best_gain[k]:
                best_gain[k] = iuq
                for x in range(nx):
                    best_idx[k, x] = counters[x]
        # odometer increment
        pos = nx - 1
        while pos >= 0:
            counters[pos] += 1
            if counters[pos] < n_comp:
                break
            counters[pos] = 0
            pos -= 1
        if pos < 0:
            break
    return best_gain, best_idx
