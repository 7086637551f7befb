"""Vectorized numpy implementation of the optimizer kernels.

This is the fallback backend (and the reference the numba backend is tested
against).  All functions operate on raw arrays:

  px    (X,)        source distribution
  rhos  (X, d, d)   ensemble states, complex128
  Q     (X, U)      row-stochastic channel
  theta (X, U)      unconstrained parameters, Q = row-softmax(theta)

The scalar objective maximized by ``adam_opt`` is

  a * I(U;Q) - b * I(U;X) - mu * max(0, I(U;X) - I(U;Q) - rt)^2
                          - nu * (I(U;X) - rt)^2

which covers the slope sweep (a = 1 + s, b = s), the feasibility polish
(a = 1, mu > 0) and the equality-constrained compression solve (a = 1,
nu > 0) with one kernel.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-18


def softmax_rows(theta: np.ndarray) -> np.ndarray:
    z = theta - theta.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def eigvals_herm_batch(mats: np.ndarray) -> np.ndarray:
    """Eigenvalues of a batch (..., d, d) of Hermitian matrices.

    Closed forms for d = 2 and d = 3 (trigonometric method), LAPACK beyond.
    """
    d = mats.shape[-1]
    if d == 2:
        a = mats[..., 0, 0].real
        c = mats[..., 1, 1].real
        b2 = np.abs(mats[..., 0, 1]) ** 2
        half = 0.5 * (a + c)
        disc = np.sqrt(0.25 * (a - c) ** 2 + b2)
        return np.stack([half - disc, half + disc], axis=-1)
    if d == 3:
        tr = np.einsum("...ii->...", mats).real
        q = tr / 3.0
        eye = np.eye(3)
        bmat = mats - q[..., None, None] * eye
        p2 = np.einsum("...ij,...ji->...", bmat, bmat).real / 6.0
        p = np.sqrt(np.maximum(p2, 0.0))
        safe_p = np.where(p > 1e-30, p, 1.0)
        c = bmat / safe_p[..., None, None]
        det = (
            c[..., 0, 0] * (c[..., 1, 1] * c[..., 2, 2] - c[..., 1, 2] * c[..., 2, 1])
            - c[..., 0, 1] * (c[..., 1, 0] * c[..., 2, 2] - c[..., 1, 2] * c[..., 2, 0])
            + c[..., 0, 2] * (c[..., 1, 0] * c[..., 2, 1] - c[..., 1, 1] * c[..., 2, 0])
        ).real
        r = np.clip(det / 2.0, -1.0, 1.0)
        phi = np.arccos(r) / 3.0
        k = np.arange(3)
        lam = q[..., None] + 2.0 * p[..., None] * np.cos(
            phi[..., None] + 2.0 * np.pi * k / 3.0
        )
        lam = np.where(p[..., None] > 1e-30, lam, q[..., None] * np.ones(3))
        return np.sort(lam, axis=-1)
    return np.linalg.eigvalsh(mats)


def _xlog2x(v: np.ndarray) -> np.ndarray:
    return np.where(v > EPS, v * np.log2(np.maximum(v, EPS)), 0.0)


def entropy_bits(v: np.ndarray) -> float:
    """Entropy of a (sub)distribution, negatives clipped."""
    v = np.clip(v, 0.0, None)
    return float(-_xlog2x(v).sum())


def avg_state_entropy(px: np.ndarray, rhos: np.ndarray) -> float:
    rbar = np.einsum("x,xij->ij", px, rhos)
    return entropy_bits(np.clip(eigvals_herm_batch(rbar), 0.0, 1.0))


def rate_gain(px: np.ndarray, rhos: np.ndarray, Q: np.ndarray):
    """(I(U;X) - I(U;Q), I(U;Q)) for the channel Q."""
    iux, iuq = mutual_infos(px, rhos, Q)
    return iux - iuq, iuq


def mutual_infos(px: np.ndarray, rhos: np.ndarray, Q: np.ndarray):
    joint = px[:, None] * Q
    pu = joint.sum(axis=0)
    mask = joint > 0
    outer = px[:, None] * pu[None, :]
    iux = float(
        (joint[mask] * np.log2(joint[mask] / np.maximum(outer[mask], EPS))).sum()
    )
    sig = np.einsum("xu,xij->uij", joint, rhos)  # unnormalized p(u) rho_u
    lam = np.clip(eigvals_herm_batch(sig), 0.0, None)
    iuq = avg_state_entropy(px, rhos) + float(_xlog2x(lam).sum()) - float(
        _xlog2x(pu).sum()
    )
    return iux, max(iuq, 0.0)


def objective_grad(
    theta: np.ndarray,
    px: np.ndarray,
    rhos: np.ndarray,
    a: float,
    b: float,
    mu: float,
    nu: float,
    rt: float,
):
    """Objective value and its gradient in the unconstrained parameters."""
    Q = softmax_rows(theta)
    joint = px[:, None] * Q
    pu = joint.sum(axis=0)
    log_pu = np.log2(np.maximum(pu, EPS))

    iux = float((joint * (np.log2(np.maximum(Q, EPS)) - log_pu[None, :])).sum())
    g_x = px[:, None] * (np.log2(np.maximum(Q, EPS)) - log_pu[None, :])

    sig = np.einsum("xu,xij->uij", joint, rhos)
    lam, vec = np.linalg.eigh(sig)
    lam_c = np.clip(lam, 0.0, None)
    log_lam = np.log2(np.maximum(lam_c, EPS))
    # log2(sigma_u) in its eigenbasis, applied back
    log_sig = np.einsum("uik,uk,ujk->uij", vec, log_lam, vec.conj())
    tr_term = np.einsum("xij,uji->xu", rhos, log_sig).real
    iuq = avg_state_entropy(px, rhos) + float(_xlog2x(lam_c).sum()) - float(
        _xlog2x(pu).sum()
    )
    g_q = px[:, None] * (tr_term - log_pu[None, :])

    rate = iux - iuq
    val = a * iuq - b * iux
    g = a * g_q - b * g_x
    if mu != 0.0 and rate > rt:
        val -= mu * (rate - rt) ** 2
        g -= 2.0 * mu * (rate - rt) * (g_x - g_q)
    if nu != 0.0:
        val -= nu * (iux - rt) ** 2
        g -= 2.0 * nu * (iux - rt) * g_x

    # chain rule through the row softmax
    inner = (Q * g).sum(axis=1, keepdims=True)
    grad = Q * (g - inner)
    return val, grad


def adam_opt(
    theta0: np.ndarray,
    px: np.ndarray,
    rhos: np.ndarray,
    a: float,
    b: float,
    mu: float,
    nu: float,
    rt: float,
    lr: float,
    max_iter: int,
    rel_tol: float,
    patience: int,
):
    """Adam ascent on the composite objective; returns (theta_best, val_best).

    Stops when the best value has improved by less than
    rel_tol * (|best| + 1) over ``patience`` consecutive iterations.
    """
    theta = theta0.copy()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2, eps = 0.9, 0.999, 1e-8
    best_val = -np.inf
    best_theta = theta.copy()
    stale = 0
    for t in range(1, max_iter + 1):
        val, grad = objective_grad(theta, px, rhos, a, b, mu, nu, rt)
        if val > best_val + rel_tol * (abs(val) + 1.0):
            best_val, best_theta, stale = val, theta.copy(), 0
        else:
            if val > best_val:
                best_val, best_theta = val, theta.copy()
            stale += 1
            if stale >= patience:
                break
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad * grad
        mh = m / (1 - b1 ** t)
        vh = v / (1 - b2 ** t)
        theta = theta + lr * mh / (np.sqrt(vh) + eps)
    return best_theta, best_val


def brute_sweep(
    px: np.ndarray,
    rhos: np.ndarray,
    rows: np.ndarray,
    r_list: np.ndarray,
    tol: float,
):
    """Exhaustive mesh search over channels built from per-row candidates.

    ``rows`` is an (n_comp, U) array of candidate probability rows; every
    channel assigns one candidate row to each input symbol.  Returns, per
    target rate in ``r_list``, the best gain found with rate <= R + tol and
    the chosen row indices (-1 where nothing was feasible).
    """
    nx = px.size
    n_comp = rows.shape[0]
    n_r = r_list.size
    best_gain = np.full(n_r, -1.0)
    best_idx = np.full((n_r, nx), -1, dtype=np.int64)
    h_bar = avg_state_entropy(px, rhos)

    chunk = max(1, 200_000 // max(n_comp, 1))
    # odometer over the first nx-1 rows, vectorized over the last row
    counters = np.zeros(nx - 1, dtype=np.int64) if nx > 1 else None
    all_last = np.arange(n_comp)
    while True:
        if nx > 1:
            fixed = [rows[counters[i]] for i in range(nx - 1)]
        else:
            fixed = []
        for start in range(0, n_comp, max(chunk, 1)):
            idx = all_last[start:start + max(chunk, 1)]
            Q = np.empty((idx.size, nx, rows.shape[1]))
            for i, row in enumerate(fixed):
                Q[:, i, :] = row
            Q[:, nx - 1, :] = rows[idx]
            joint = px[None, :, None] * Q
            pu = joint.sum(axis=1)
            outer = px[None, :, None] * pu[:, None, :]
            r = np.where(joint > 0, joint / np.maximum(outer, EPS), 1.0)
            iux = (joint * np.log2(np.maximum(r, EPS))).sum(axis=(1, 2))
            sig = np.einsum("cxu,xij->cuij", joint, rhos)
            lam = np.clip(eigvals_herm_batch(sig), 0.0, None)
            iuq = h_bar + _xlog2x(lam).sum(axis=(1, 2)) - _xlog2x(pu).sum(axis=1)
            rate = iux - iuq
            for k in range(n_r):
                feas = rate <= r_list[k] + tol
                if not feas.any():
                    continue
                j = np.argmax(np.where(feas, iuq, -np.inf))
                if iuq[j] > best_gain[k]:
                    best_gain[k] = iuq[j]
                    if nx > 1:
                        best_idx[k, : nx - 1] = counters
                    best_idx[k, nx - 1] = idx[j]
        if nx == 1:
            break
        pos = nx - 2
        while pos >= 0:
            counters[pos] += 1
            if counters[pos] < n_comp:
                break
            counters[pos] = 0
            pos -= 1
        if pos < 0:
            break
    return best_gain, best_idx
