"""Distillable common randomness versus communication rate.

The central quantity is

    D*(R) = max over channels U|X of I(U;Q)  s.t.  I(U;X) - I(U;Q) <= R,

with |U| = |X| + 1 outcomes (larger alphabets cannot help).  The maximizer
is found by multi-start gradient ascent over row-softmax parametrized
channels: a slope sweep / bisection on the supporting-line weight s of

    G_s = (1 + s) I(U;Q) - s I(U;X)

followed by a quadratic-penalty feasibility polish at the requested rate.
``brute_dstar`` provides an independent exhaustive mesh-search oracle for
small alphabets.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from ._kernels import adam_opt, rate_gain
from .config import SolverConfig
from .ensembles import AuxChannel, CQEnsemble
from .errors import DomainError, EnvelopeExceeded, NotPureEnsemble, SizeMismatch
from .info import binary_entropy, holevo_chi, shannon_entropy
from .linalg import DensityMatrix, vn_entropy

RATE_EPS = 1e-9


@dataclass
class CurvePoint:
    comm_rate: float  # R
    distilled: float  # D
    cr_rate: float  # C = R + D, exact by construction
    channel: AuxChannel | None = None
    slope_param: float = 0.0
    witness_rate: float = 0.0  # rate the witness channel actually achieves
    witness_gain: float = 0.0  # gain the witness channel actually achieves
    converged: bool = True


@dataclass
class TradeoffCurve:
    ensemble_id: str
    points: list[CurvePoint]
    chi: float
    sw: tuple  # (C, R, D) Slepian-Wolf point

    def rates(self) -> np.ndarray:
        return np.array([p.comm_rate for p in self.points])

    def gains(self) -> np.ndarray:
        return np.array([p.distilled for p in self.points])


def eval_pair(e: CQEnsemble, w: AuxChannel):
    """(rate, gain) = (I(U;X) - I(U;Q), I(U;Q)) for a channel."""
    if w.in_size != e.size:
        raise SizeMismatch(f"channel rows {w.in_size} != alphabet {e.size}")
    r, g = rate_gain(e.probs, e.state_array(), np.ascontiguousarray(w.matrix))
    return float(r), float(g)


# --- multi-start machinery -------------------------------------------------

_THETA_SCALE = 14.0  # boundary rows get e^14 : 1 odds, effectively exact


def _structured_thetas(nx: int, nu: int):
    ident = np.zeros((nx, nu))
    ident[:, :nx][np.arange(nx), np.arange(nx)] = _THETA_SCALE
    const = np.zeros((nx, nu))
    const[:, 0] = _THETA_SCALE
    flat = np.zeros((nx, nu))
    return [ident, const, flat]


def _channel_theta(Q: np.ndarray) -> np.ndarray:
    return np.log(np.clip(Q, 1e-12, None))


def _multistart(
    px,
    rhos,
    nu: int,
    cfg: SolverConfig,
    key: tuple,
    a: float,
    b: float,
    mu: float,
    nup: float,
    rt: float,
    n_starts: int,
    extra: list | None = None,
):
    """Best (theta, value) over structured + seeded-random + warm starts."""
    nx = px.size
    thetas = _structured_thetas(nx, nu) + [t.copy() for t in (extra or [])]
    for i in range(n_starts):
        rng = cfg.rng(*key, i)
        q0 = rng.dirichlet(np.ones(nu), size=nx)
        thetas.append(_channel_theta(q0))
    best_theta, best_val = None, -np.inf
    for t0 in thetas:
        theta, val = adam_opt(
            np.ascontiguousarray(t0, dtype=float),
            px,
            rhos,
            float(a),
            float(b),
            float(mu),
            float(nup),
            float(rt),
            cfg.lr,
            cfg.max_iter,
            cfg.rel_tol,
            cfg.patience,
        )
        if val > best_val:
            best_theta, best_val = theta, val
    return best_theta, best_val


def _theta_channel(theta: np.ndarray) -> AuxChannel:
    from ._kernels import softmax_rows

    return AuxChannel(np.asarray(softmax_rows(np.ascontiguousarray(theta))))


def _mix_to_feasible(px, rhos, Q, R, tol):
    """Shrink toward the constant channel until rate <= R + tol."""
    const = np.zeros_like(Q)
    const[:, 0] = 1.0
    lo, hi = 0.0, 1.0
    r, g = rate_gain(px, rhos, np.ascontiguousarray(Q))
    if r <= R + tol:
        return Q, r, g
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        qm = (1 - mid) * Q + mid * const
        r, g = rate_gain(px, rhos, np.ascontiguousarray(qm))
        if r <= R + tol:
            hi = mid
        else:
            lo = mid
    qf = (1 - hi) * Q + hi * const
    r, g = rate_gain(px, rhos, np.ascontiguousarray(qf))
    return qf, r, g


def maximize_slope(e: CQEnsemble, s: float, cfg: SolverConfig, key=(0,), extra=None,
                   n_starts=None):
    """Maximize G_s; returns (theta, rate, gain)."""
    px, rhos = e.probs, e.state_array()
    nu = e.size + 1
    theta, _ = _multistart(
        px, rhos, nu, cfg, key, 1.0 + s, s, 0.0, 0.0, 0.0,
        n_starts if n_starts is not None else cfg.starts, extra,
    )
    r, g = rate_gain(px, rhos, np.ascontiguousarray(_theta_channel(theta).matrix))
    return theta, float(r), float(g)


def solve_dstar(
    e: CQEnsemble,
    R: float,
    cfg: SolverConfig | None = None,
    extra_channels: list | None = None,
    point_key: int = 0,
) -> CurvePoint:
    """Best found D at communication rate R, with the witness channel."""
    if R < 0:
        raise DomainError(f"rate must be nonnegative, got {R}")
    cfg = cfg or SolverConfig()
    chi = holevo_chi(e)
    hx = shannon_entropy(e.probs)
    hxq = hx - chi
    nx = e.size
    nu = nx + 1

    if chi < 1e-12:
        w = AuxChannel.constant(nx, nu)
        return CurvePoint(R, 0.0, R, w, 0.0, 0.0, 0.0, True)

    px, rhos = e.probs, e.state_array()
    if R >= hxq - RATE_EPS:
        w = AuxChannel.identity(nx, nu)
        r, g = eval_pair(e, w)
        return CurvePoint(R, g, R + g, w, 0.0, r, g, True)

    extra = [_channel_theta(np.asarray(c.matrix if isinstance(c, AuxChannel) else c))
             for c in (extra_channels or [])]

    # slope bisection: rate decreases as s grows
    candidates = []  # (gain, rate, theta, s)
    warm: list[np.ndarray] = list(extra)

    def probe(s, n_starts):
        theta, r, g = maximize_slope(
            e, s, cfg, key=(point_key, int(round(s * 1e6)) % (2 ** 31)),
            extra=warm, n_starts=n_starts,
        )
        warm.append(theta)
        del warm[:-6]
        candidates.append((g, r, theta, s))
        return theta, r, g

    lo, lo_rate = 0.0, probe(0.0, cfg.starts_inner)[1]
    hi = 1.0
    hi_rate = lo_rate
    while hi <= cfg.s_max:
        hi_rate = probe(hi, cfg.starts_inner)[1]
        if hi_rate <= R + cfg.rate_tol:
            break
        hi *= 3.0
    if hi_rate <= R + cfg.rate_tol and lo_rate > R:
        for _ in range(cfg.bisect_iters):
            mid = 0.5 * (lo + hi)
            _, r_mid, _ = probe(mid, cfg.starts_inner)
            if r_mid <= R + cfg.rate_tol:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-4:
                break

    # feasibility polish at the requested rate (full start budget once)
    polish_theta, _ = _multistart(
        px, rhos, nu, cfg, (point_key, -1), 1.0, 0.0, cfg.penalty_ramp[0], 0.0, R,
        cfg.starts, extra=warm,
    )
    for mu in cfg.penalty_ramp[1:]:
        polish_theta, _ = _multistart(
            px, rhos, nu, cfg, (point_key, -2), 1.0, 0.0, mu, 0.0, R,
            0, extra=[polish_theta],
        )
    q_pol = _theta_channel(polish_theta).matrix
    r_pol, g_pol = rate_gain(px, rhos, np.ascontiguousarray(q_pol))
    candidates.append((g_pol, r_pol, polish_theta, -1.0))

    best = None
    for g, r, theta, s in candidates:
        if r <= R + cfg.rate_tol and (best is None or g > best[0]):
            best = (g, r, theta, s)
    converged = best is not None
    if best is None:
        # nothing feasible yet: force feasibility of the best gain candidate
        g, r, theta, s = max(candidates, key=lambda c: c[0])
        qf, r, g = _mix_to_feasible(px, rhos, _theta_channel(theta).matrix, R, cfg.rate_tol)
        w = AuxChannel(qf)
        return CurvePoint(R, float(g), R + float(g), w, s, float(r), float(g), False)
    g, r, theta, s = best
    w = _theta_channel(theta)
    return CurvePoint(R, float(g), R + float(g), w, max(s, 0.0), float(r), float(g), converged)


# --- curve tracing ---------------------------------------------------------


def _upper_concave_envelope(pts):
    """Vertices of the upper concave hull of (r, d) points, r ascending."""
    pts = sorted(pts, key=lambda p: (p[0], -p[1]))
    dedup = []
    for p in pts:
        if dedup and abs(p[0] - dedup[-1][0]) < 1e-12:
            continue
        dedup.append(p)
    hull = []
    for p in dedup:
        while len(hull) >= 2:
            (r1, d1), (r2, d2) = hull[-2][:2], hull[-1][:2]
            # keep hull concave: slope to p must not exceed incoming slope
            if (d2 - d1) * (p[0] - r2) <= (p[1] - d2) * (r2 - r1):
                hull.pop()
            else:
                break
        while hull and p[1] >= hull[-1][1] and p[0] <= hull[-1][0] + 1e-12:
            hull.pop()
        hull.append(p)
    # drop dominated leading points (lower d at higher r cannot happen after hull)
    return hull


def _envelope_eval(hull, r):
    rs = [h[0] for h in hull]
    ds = [h[1] for h in hull]
    if r <= rs[0]:
        return ds[0] if r >= rs[0] - 1e-12 else ds[0]
    if r >= rs[-1]:
        return ds[-1]
    return float(np.interp(r, rs, ds))


def trace_curve(
    e: CQEnsemble,
    grid,
    cfg: SolverConfig | None = None,
    extra_channels: list | None = None,
    threads: int = 1,
) -> TradeoffCurve:
    """D(R) on a grid of R values via slope sweep + direct solves."""
    cfg = cfg or SolverConfig()
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty R grid")
    chi = holevo_chi(e)
    hx = shannon_entropy(e.probs)
    hxq = hx - chi
    sw = (hx, hxq, chi)

    if chi < 1e-12:
        pts = [CurvePoint(float(r), 0.0, float(r), AuxChannel.constant(e.size, e.size + 1))
               for r in np.sort(grid)]
        return TradeoffCurve(e.label or "ensemble", pts, chi, sw)

    vertices = []  # (rate, gain, channel, slope, converged)
    w_id = AuxChannel.identity(e.size, e.size + 1)
    r_id, g_id = eval_pair(e, w_id)
    vertices.append((r_id, g_id, w_id, 0.0, True))

    warm: list[np.ndarray] = []
    s_values = np.concatenate([[0.0], np.geomspace(0.05, cfg.s_max, 20)])
    for i, s in enumerate(s_values):
        theta, r, g = maximize_slope(e, float(s), cfg, key=(1000 + i,), extra=warm,
                                     n_starts=cfg.starts_inner)
        warm.append(theta)
        del warm[:-4]
        vertices.append((r, g, _theta_channel(theta), float(s), True))

    jobs = [(i, float(r)) for i, r in enumerate(np.sort(grid)) if r < hxq - RATE_EPS]
    if threads > 1 and len(jobs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(
                lambda job: solve_dstar(e, job[1], cfg, extra_channels, point_key=job[0]),
                jobs,
            ))
    else:
        solved = [solve_dstar(e, r, cfg, extra_channels, point_key=i) for i, r in jobs]
    for pt in solved:
        vertices.append((pt.witness_rate, pt.witness_gain, pt.channel, pt.slope_param,
                         pt.converged))

    hull = _upper_concave_envelope([(v[0], min(v[1], chi)) for v in vertices])
    points = []
    for r in np.sort(grid):
        d = min(_envelope_eval(hull, r), chi)
        # witness: best vertex feasible at this rate
        best_v = None
        for v in vertices:
            if v[0] <= r + cfg.rate_tol and (best_v is None or v[1] > best_v[1]):
                best_v = v
        if best_v is None:
            best_v = (0.0, 0.0, AuxChannel.constant(e.size, e.size + 1), 0.0, True)
        points.append(
            CurvePoint(float(r), float(d), float(r) + float(d), best_v[2], best_v[3],
                       float(best_v[0]), float(best_v[1]), best_v[4])
        )
    return TradeoffCurve(e.label or "ensemble", points, chi, sw)


# --- brute-force oracle ----------------------------------------------------

_BRUTE_BUDGET = 2 * 10 ** 8


def _mesh_rows(mesh: int, parts: int) -> np.ndarray:
    """All probability rows with entries k/mesh, k integer, summing to 1."""
    rows = []
    for bars in combinations(range(mesh + parts - 1), parts - 1):
        prev = -1
        counts = []
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(mesh + parts - 2 - prev)
        rows.append(counts)
    return np.asarray(rows, dtype=float) / mesh


def brute_channel_alphabet(nx: int, mesh: int) -> int:
    """Largest |U| <= |X| + 1 whose exhaustive mesh sweep fits the budget."""
    for nu in range(nx + 1, 1, -1):
        if comb(mesh + nu - 1, nu - 1) ** nx <= _BRUTE_BUDGET:
            return nu
    return 2


def brute_dstar_multi(e: CQEnsemble, r_list, mesh: int, out_size: int | None = None):
    """Exhaustive mesh oracle, evaluated for several rates in one sweep."""
    from ._kernels import brute_sweep

    if e.size > 3:
        raise EnvelopeExceeded(f"brute force limited to |X| <= 3, got {e.size}")
    nu = out_size or brute_channel_alphabet(e.size, mesh)
    rows = _mesh_rows(mesh, nu)
    if rows.shape[0] ** e.size > _BRUTE_BUDGET:
        raise EnvelopeExceeded(
            f"{rows.shape[0]}^{e.size} channels exceed the sweep budget"
        )
    r_arr = np.asarray(r_list, dtype=float)
    gains, idx = brute_sweep(
        e.probs, e.state_array(), np.ascontiguousarray(rows), r_arr, 1e-9
    )
    out = []
    for k, r in enumerate(r_arr):
        if gains[k] < 0:
            out.append(CurvePoint(float(r), 0.0, float(r),
                                  AuxChannel.constant(e.size, nu), converged=False))
            continue
        Q = rows[idx[k]]
        rr, gg = rate_gain(e.probs, e.state_array(), np.ascontiguousarray(Q))
        out.append(CurvePoint(float(r), float(gg), float(r) + float(gg),
                              AuxChannel(Q), 0.0, float(rr), float(gg), True))
    return out


def brute_dstar(e: CQEnsemble, R: float, mesh: int, out_size: int | None = None) -> CurvePoint:
    return brute_dstar_multi(e, [R], mesh, out_size)[0]


# --- compression dual ------------------------------------------------------


def qstar_point(e: CQEnsemble, R: float, cfg: SolverConfig | None = None,
                point_key: int = 0) -> float:
    """Q*(R) = min H(Q|U) subject to I(U;X) = R, pure-state ensembles."""
    cfg = cfg or SolverConfig()
    if not e.is_pure():
        raise NotPureEnsemble("compression dual requires a pure-state ensemble")
    hq = vn_entropy(e.average_state())
    hx = shannon_entropy(e.probs)
    if R >= hx - RATE_EPS:
        return 0.0
    px, rhos = e.probs, e.state_array()
    nu = e.size + 1
    theta, _ = _multistart(
        px, rhos, nu, cfg, (7000 + point_key,), 1.0, 0.0, 0.0, cfg.penalty_ramp[0], R,
        cfg.starts,
    )
    for nup in cfg.penalty_ramp[1:]:
        theta, _ = _multistart(
            px, rhos, nu, cfg, (7000 + point_key, 1), 1.0, 0.0, 0.0, nup, R,
            0, extra=[theta],
        )
    _, g = rate_gain(px, rhos, np.ascontiguousarray(_theta_channel(theta).matrix))
    return float(max(hq - g, 0.0))


def qstar_curve(e: CQEnsemble, grid, cfg: SolverConfig | None = None):
    return [(float(r), qstar_point(e, float(r), cfg, point_key=i))
            for i, r in enumerate(np.asarray(grid, dtype=float))]


@dataclass
class DualityReport:
    xs: list
    residuals: list
    max_residual: float


def check_duality(e: CQEnsemble, xs, cfg: SolverConfig | None = None) -> DualityReport:
    """Residuals of D*(x) + Q*(D*(x) + x) = H(Q) on pure-state ensembles."""
    cfg = cfg or SolverConfig()
    hq = vn_entropy(e.average_state())
    res = []
    for i, x in enumerate(xs):
        d = solve_dstar(e, float(x), cfg, point_key=9000 + i).distilled
        q = qstar_point(e, float(x) + d, cfg, point_key=9000 + i)
        res.append(abs(d + q - hq))
    return DualityReport(list(map(float, xs)), res, max(res))


# --- additivity ------------------------------------------------------------


def tensor_ensembles(e1: CQEnsemble, e2: CQEnsemble) -> CQEnsemble:
    probs = np.outer(e1.probs, e2.probs).ravel()
    states = [
        DensityMatrix(np.kron(s1.mat, s2.mat))
        for s1 in e1.states
        for s2 in e2.states
    ]
    return CQEnsemble(probs, states, label=f"{e1.label}(x){e2.label}")


@dataclass
class AdditivityReport:
    rate: float
    joint: float  # D* of the product ensemble at R
    split: float  # best D*(e1, R1) + D*(e2, R - R1)
    gap: float
    best_split: float


def check_additivity(
    e1: CQEnsemble,
    e2: CQEnsemble,
    R: float,
    cfg: SolverConfig | None = None,
    split_points: int = 9,
) -> AdditivityReport:
    """Single-letterization check: D*(e1 x e2, R) vs the best rate split."""
    cfg = cfg or SolverConfig()
    if e1.size * e2.size > 6:
        raise EnvelopeExceeded("joint alphabet larger than 6")
    joint_e = tensor_ensembles(e1, e2)
    joint = solve_dstar(joint_e, R, cfg, point_key=500).distilled

    best_split, best_r1 = -np.inf, 0.0
    for i, r1 in enumerate(np.linspace(0.0, R, split_points)):
        d1 = solve_dstar(e1, float(r1), cfg, point_key=600 + i).distilled
        d2 = solve_dstar(e2, float(R - r1), cfg, point_key=700 + i).distilled
        if d1 + d2 > best_split:
            best_split, best_r1 = d1 + d2, float(r1)
    return AdditivityReport(R, joint, best_split, joint - best_split, best_r1)


# --- closed-form uniform-ensemble curve ------------------------------------


def uniform_curve_closed_form(lambdas):
    """(R, D) parametrization of the uniform Bloch-sphere ensemble curve.

    The channel behind the parametrization weights guesses u by
    exp(lam |<u|x>|^2); its input information evaluates in nats to
    lam/(e^lam - 1) - 1 + ln(lam e^lam / (e^lam - 1)), while the quantum
    gain is 1 - h2(1/lam - 1/(e^lam - 1)) bits, so the rate converts the
    first part by 1/ln 2 before subtracting.  The parameter runs over
    (0, inf), with (R, D) -> (0, 0) as lam -> 0+ and D -> 1 as lam -> inf.
    Discretized sphere ensembles reproduce these pairs to the mesh error.
    """
    out = []
    for lam in np.atleast_1d(np.asarray(lambdas, dtype=float)):
        if lam <= 0:
            raise DomainError(f"parameter must be positive, got {lam}")
        eml = np.exp(-lam)
        arg = 1.0 / lam - eml / (1.0 - eml)  # = 1/lam - 1/(e^lam - 1)
        arg = min(max(arg, 0.0), 1.0)
        # lam/(e^lam-1) - 1 + ln(lam) + lam - ln(e^lam-1), written to stay
        # finite for large lam
        iux_nats = lam * eml / (1.0 - eml) - 1.0 + np.log(lam) - np.log1p(-eml)
        d = 1.0 - binary_entropy(arg)
        r = iux_nats / np.log(2.0) - d
        out.append((float(r), float(d)))
    return out


def uniform_lambda_channel(e: CQEnsemble, lam: float) -> AuxChannel:
    """Structured start for sphere discretizations: exponential overlap rows.

    U ranges over the ensemble's own points plus one dummy outcome; rows are
    proportional to exp(lam |<phi_u|phi_x>|^2).
    """
    n = e.size
    overlaps = np.empty((n, n))
    for x in range(n):
        for u in range(n):
            overlaps[x, u] = np.trace(e.states[x].mat @ e.states[u].mat).real
    q = np.exp(lam * (overlaps - overlaps.max(axis=1, keepdims=True)))
    q = q / q.sum(axis=1, keepdims=True)
    return AuxChannel(np.concatenate([q * (1 - 1e-9), np.full((n, 1), 1e-9)], axis=1))
