"""Measurement-side optimization for bipartite states.

Maximizes the classical correlation left on Bob's side after Alice measures:

    d1_infty(rho) = max over POVMs (E_x) of I(X;Q),

the accessible information of an ensemble (same program with a classical Q),
and the rate curve obtained by composing a measurement with the channel
optimizer.  POVMs are parametrized by K unnormalized kets v_x with

    E_x = S^{-1/2} |v_x><v_x| S^{-1/2},    S = sum_x |v_x><v_x|,

so completeness holds by construction and gradient ascent runs in the
unconstrained ket space.  The analytic gradient chains through S^{-1/2}
with the divided-difference (Loewner) kernel of t -> t^{-1/2}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SolverConfig
from .ensembles import BipartiteState, CQEnsemble, ehs_embed, measure_ensemble
from .errors import BadParam, EnvelopeExceeded, InvalidPovm, NotPure
from .info import holevo_chi, shannon_entropy
from .linalg import DensityMatrix, vn_entropy
from .tradeoff import TradeoffCurve, _upper_concave_envelope, _envelope_eval, trace_curve

LOG_FLOOR = 1e-18
LN2 = np.log(2.0)


@dataclass
class Povm:
    dim: int
    elements: list

    def __post_init__(self):
        total = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for el in self.elements:
            el = np.asarray(el)
            if el.shape != (self.dim, self.dim):
                raise InvalidPovm(f"element shape {el.shape} vs dim {self.dim}")
            if np.max(np.abs(el - el.conj().T)) > 1e-8:
                raise InvalidPovm("non-Hermitian element")
            if np.linalg.eigvalsh(el).min() < -1e-9:
                raise InvalidPovm("element has a negative eigenvalue")
            total += el
        if np.max(np.abs(total - np.eye(self.dim))) > 1e-8:
            raise InvalidPovm("elements do not sum to the identity")

    def __len__(self):
        return len(self.elements)


@dataclass
class MeasurementReport:
    value: float
    povm: Povm
    n_outcomes: int
    converged: bool = True


def random_povm(dim: int, k: int, rng) -> Povm:
    """k-outcome POVM from Gaussian kets, completed via S^{-1/2} sandwich."""
    if k < 1:
        raise BadParam(f"need at least one outcome, got {k}")
    if k == 1:
        return Povm(dim, [np.eye(dim, dtype=np.complex128)])
    v = rng.normal(size=(k, dim)) + 1j * rng.normal(size=(k, dim))
    return Povm(dim, _kets_to_elements(v))


# --- ket parametrization ---------------------------------------------------


def _kets_to_elements(v: np.ndarray):
    s = v.T @ v.conj()  # sum_x |v_x><v_x| as d x d
    w = _inv_sqrt_psd(s)
    return [np.outer(w @ v[x], (w @ v[x]).conj()) for x in range(v.shape[0])]


def _inv_sqrt_psd(s: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(s)
    vals = np.clip(vals, 1e-14, None)
    return (vecs * (vals ** -0.5)) @ vecs.conj().T


def _povm_value_grad(v: np.ndarray, gfun):
    """Value and ket-space gradient of an objective given per-element grads.

    ``gfun(elements)`` must return (value, list of Hermitian d x d matrices
    G_x with dJ = sum_x Tr[G_x dE_x]).  Returns (value, dJ/dv_bar) with
    dJ = 2 Re sum_x <grad_x | dv_x>.
    """
    k, d = v.shape
    s = v.T @ v.conj()
    vals, vecs = np.linalg.eigh(s)
    vals = np.clip(vals, 1e-14, None)
    w = (vecs * (vals ** -0.5)) @ vecs.conj().T
    wv = v @ w.T  # row x is W v_x  (w Hermitian: (W v)_i = sum_j W_ij v_j)
    elements = [np.outer(wv[x], wv[x].conj()) for x in range(k)]
    value, gs = gfun(elements)

    grad = np.empty_like(v)
    m = np.zeros((d, d), dtype=np.complex128)
    for x in range(k):
        gwv = gs[x] @ wv[x]
        grad[x] = w @ gwv
        m += np.outer(v[x], gwv.conj()) + np.outer(gwv, v[x].conj())
    a = 0.5 * (m + m.conj().T)
    # Loewner kernel of t -> t^{-1/2} at the eigenvalues of S
    rs = vals ** -0.5
    diff = vals[:, None] - vals[None, :]
    close = np.abs(diff) < 1e-12 * max(vals.max(), 1.0)
    kern = np.where(close, -0.5 * vals[:, None] ** -1.5,
                    (rs[:, None] - rs[None, :]) / np.where(close, 1.0, diff))
    at = vecs.conj().T @ a @ vecs
    c = vecs @ (kern * at) @ vecs.conj().T
    grad += v @ c.T  # (C v_x)_i = sum_j C_ij v_j
    return value, grad


def _adam_kets(v0, gfun, cfg: SolverConfig):
    v = v0.copy()
    m = np.zeros_like(v)
    s2 = np.zeros_like(v, dtype=float)
    b1, b2, eps = 0.9, 0.999, 1e-8
    best_v, best_val = v.copy(), -1e300
    stale = 0
    for t in range(1, cfg.max_iter + 1):
        val, g = _povm_value_grad(v, gfun)
        if val > best_val:
            if val > best_val + cfg.rel_tol * max(1.0, abs(best_val)):
                stale = 0
            else:
                stale += 1
            best_val, best_v = val, v.copy()
        else:
            stale += 1
        if stale > cfg.patience:
            break
        m = b1 * m + (1 - b1) * g
        s2 = b2 * s2 + (1 - b2) * np.abs(g) ** 2
        mh = m / (1 - b1 ** t)
        sh = s2 / (1 - b2 ** t)
        v = v + cfg.lr * mh / (np.sqrt(sh) + eps)
    return best_v, best_val


# --- objectives ------------------------------------------------------------


def _log2m(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    return (vecs * np.log2(np.clip(vals, LOG_FLOOR, None))) @ vecs.conj().T


def _chi_gfun(rho: BipartiteState):
    """Objective/grad factory for max I(X;Q) after measuring the A side."""
    da, db = rho.dim_a, rho.dim_b
    t = rho.state.mat.reshape(da, db, da, db)
    rho_b = np.einsum("ajab->jb", t)
    hb = vn_entropy(DensityMatrix(rho_b))

    def gfun(elements):
        value = hb
        gs = []
        for el in elements:
            tau = np.einsum("jm,majb->ab", el, t)
            p = max(float(np.trace(tau).real), LOG_FLOOR)
            vals = np.clip(np.linalg.eigvalsh(tau), 0.0, None)
            nz = vals[vals > LOG_FLOOR]
            value += float(np.sum(nz * np.log2(nz))) - p * np.log2(p)
            lam = _log2m(tau / p)
            g = np.einsum("jakb,ba->jk", t, lam)  # Tr_B[(1 (x) Lam) rho]
            gs.append(0.5 * (g + g.conj().T))
        return value, gs

    return gfun


def _acc_gfun(e: CQEnsemble):
    px = e.probs
    rhos = e.state_array()

    def gfun(elements):
        k = len(elements)
        pyx = np.empty((len(px), k))
        for y, el in enumerate(elements):
            pyx[:, y] = np.einsum("ij,xji->x", el, rhos).real
        pyx = np.clip(pyx, LOG_FLOOR, None)
        py = px @ pyx
        ratio = np.log2(pyx / py[None, :])
        value = float(np.sum(px[:, None] * pyx * ratio))
        gs = []
        for y in range(k):
            g = np.einsum("x,xij->ij", px * ratio[:, y], rhos)
            gs.append(0.5 * (g + g.conj().T))
        return value, gs

    return gfun


# --- top-level searches ----------------------------------------------------


def _starts(dim: int, k: int, cfg: SolverConfig, key: tuple, n_starts: int):
    outs = []
    basis = np.zeros((k, dim), dtype=np.complex128)
    for i in range(min(k, dim)):
        basis[i, i] = 1.0
    for i in range(dim, k):
        basis[i, i % dim] = 1e-4
    outs.append(basis)
    for i in range(n_starts):
        rng = cfg.rng(*key, i)
        outs.append(rng.normal(size=(k, dim)) + 1j * rng.normal(size=(k, dim)))
    return outs


def _prune(povm: Povm) -> Povm:
    kept = [el for el in povm.elements if float(np.trace(el).real) > 1e-10]
    total = sum(kept)
    kept[-1] = kept[-1] + (np.eye(povm.dim) - total)  # reabsorb pruned dust
    return Povm(povm.dim, kept)


def _maximize(dim, k, gfun, cfg: SolverConfig, key):
    best_v, best_val = None, -np.inf
    for v0 in _starts(dim, k, cfg, key, cfg.starts):
        v, val = _adam_kets(v0, gfun, cfg)
        if val > best_val:
            best_v, best_val = v, val
    return best_v, best_val


def d1_infty(rho: BipartiteState, cfg: SolverConfig | None = None) -> MeasurementReport:
    """Best classical correlation I(X;Q) extractable by measuring side A."""
    cfg = cfg or SolverConfig()
    if rho.dim_a > 4:
        raise EnvelopeExceeded(f"A side dimension {rho.dim_a} > 4")
    k = rho.dim_a ** 2
    gfun = _chi_gfun(rho)
    v, val = _maximize(rho.dim_a, k, gfun, cfg, (31,))
    povm = _prune(Povm(rho.dim_a, _kets_to_elements(v)))
    value = holevo_chi(measure_ensemble(rho, povm))
    return MeasurementReport(float(value), povm, len(povm), True)


def accessible_info(e: CQEnsemble, cfg: SolverConfig | None = None) -> MeasurementReport:
    """Best classical mutual information from measuring the ensemble states."""
    cfg = cfg or SolverConfig()
    if e.dim > 4:
        raise EnvelopeExceeded(f"state dimension {e.dim} > 4")
    k = e.dim ** 2
    gfun = _acc_gfun(e)
    v, val = _maximize(e.dim, k, gfun, cfg, (37,))
    povm = _prune(Povm(e.dim, _kets_to_elements(v)))
    value, _ = gfun(povm.elements)
    chi = holevo_chi(e)
    value = min(value, chi + 1e-9)  # Holevo bound sanity clamp
    return MeasurementReport(float(value), povm, len(povm), True)


def projective_scan(e: CQEnsemble, n_angles: int = 721, refine: int = 2):
    """1-D oracle for qubit ensembles: scan projective measurement angles.

    Sweeps |theta> = (cos t, sin t) over [0, pi), evaluates I(X;Y) for the
    two-outcome projective measurement, then refines around the best angle.
    Valid as a global baseline for real-amplitude qubit ensembles.
    """
    if e.dim != 2:
        raise EnvelopeExceeded("scan oracle is for qubit ensembles")
    gfun = _acc_gfun(e)

    def value_at(t):
        ket = np.array([np.cos(t), np.sin(t)], dtype=np.complex128)
        p0 = np.outer(ket, ket.conj())
        val, _ = gfun([p0, np.eye(2) - p0])
        return val

    ts = np.linspace(0.0, np.pi, n_angles, endpoint=False)
    vals = np.array([value_at(t) for t in ts])
    best = int(np.argmax(vals))
    t_best, v_best = ts[best], vals[best]
    width = np.pi / n_angles
    for _ in range(refine):
        fine = np.linspace(t_best - width, t_best + width, 41)
        fv = np.array([value_at(t) for t in fine])
        j = int(np.argmax(fv))
        t_best, v_best = fine[j], fv[j]
        width /= 20.0
    return float(v_best), float(t_best)


@dataclass
class C1Curve:
    hull: TradeoffCurve
    raw: list  # (R, best pointwise D) before the concave hull


def c1_curve(rho: BipartiteState, grid, cfg: SolverConfig | None = None,
             n_povms: int = 6) -> C1Curve:
    """CR curve with one measurement: max over POVMs of the induced curve.

    Reports both the raw pointwise maximum and its upper concave hull, since
    the pointwise maximum of concave curves need not be concave.
    """
    cfg = cfg or SolverConfig()
    if rho.dim_a > 4:
        raise EnvelopeExceeded(f"A side dimension {rho.dim_a} > 4")
    grid = np.asarray(grid, dtype=float)
    povms = []
    basis = Povm(rho.dim_a, [np.diag((np.arange(rho.dim_a) == i).astype(complex))
                             for i in range(rho.dim_a)])
    povms.append(basis)
    opt = d1_infty(rho, cfg)
    povms.append(opt.povm)
    for i in range(n_povms - 2):
        povms.append(random_povm(rho.dim_a, rho.dim_a ** 2, cfg.rng(41, i)))

    best = np.full(grid.size, 0.0)
    chis, curves = [], []
    for m in povms:
        ind = measure_ensemble(rho, m)
        if holevo_chi(ind) < 1e-12:
            continue
        c = trace_curve(ind, grid, cfg)
        chis.append(c.chi)
        curves.append(c)
        best = np.maximum(best, c.gains())
    raw = list(zip(grid.tolist(), best.tolist()))
    hull_pts = _upper_concave_envelope(raw + [(0.0, 0.0)])
    ds = [float(min(_envelope_eval(hull_pts, r), max(chis) if chis else 0.0))
          for r in grid]
    base = curves[0] if curves else trace_curve(measure_ensemble(rho, basis), grid, cfg)
    points = []
    from .tradeoff import CurvePoint

    for r, d in zip(grid, ds):
        points.append(CurvePoint(float(r), d, float(r) + d))
    hull = TradeoffCurve("c1", points, max(chis) if chis else 0.0, base.sw)
    return C1Curve(hull, raw)


# --- additivity checks -----------------------------------------------------


def tensor_bipartite(r1: BipartiteState, r2: BipartiteState) -> BipartiteState:
    """(A B) x (A' B') reordered to ((A A')(B B'))."""
    da, db = r1.dim_a, r1.dim_b
    dc, dd = r2.dim_a, r2.dim_b
    full = np.kron(r1.state.mat, r2.state.mat)
    t = full.reshape(da, db, dc, dd, da, db, dc, dd)
    t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7).reshape(da * dc * db * dd, -1)
    return BipartiteState(da * dc, db * dd, DensityMatrix(t))


@dataclass
class AdditivityCheck:
    joint: float
    parts_sum: float
    gap: float  # joint - parts_sum; product witnesses make >= -tol exact
    entanglement: float | None = None  # pure case: entropy of entanglement


def separable_state(mixture) -> BipartiteState:
    """Dense state from an explicit product decomposition [(q, tau_a, tau_b)]."""
    q0, a0, b0 = mixture[0]
    da = np.asarray(a0).shape[0]
    db = np.asarray(b0).shape[0]
    out = np.zeros((da * db, da * db), dtype=np.complex128)
    for q, ta, tb in mixture:
        out += q * np.kron(np.asarray(ta), np.asarray(tb))
    return BipartiteState(da, db, DensityMatrix(out))


def check_separable_additivity(mixture, sigma: BipartiteState,
                               cfg: SolverConfig | None = None) -> AdditivityCheck:
    """d1_infty(rho (x) sigma) vs d1_infty(rho) + d1_infty(sigma) for
    separable rho given by an explicit product decomposition."""
    cfg = cfg or SolverConfig()
    rho = separable_state(mixture)
    if rho.dim_a * sigma.dim_a > 4:
        raise EnvelopeExceeded("joint A dimension exceeds 4")
    joint = d1_infty(tensor_bipartite(rho, sigma), cfg).value
    parts = d1_infty(rho, cfg).value + d1_infty(sigma, cfg).value
    return AdditivityCheck(joint, parts, joint - parts)


def check_pure_additivity(psi: BipartiteState, sigma: BipartiteState,
                          cfg: SolverConfig | None = None) -> AdditivityCheck:
    """Same comparison with a pure first factor; also reports its entropy of
    entanglement, which d1_infty(psi) must match."""
    cfg = cfg or SolverConfig()
    from .info import entanglement_entropy

    ent = entanglement_entropy(psi)  # raises NotPure on mixed input
    if psi.dim_a * sigma.dim_a > 4:
        raise EnvelopeExceeded("joint A dimension exceeds 4")
    joint = d1_infty(tensor_bipartite(psi, sigma), cfg).value
    parts = d1_infty(psi, cfg).value + d1_infty(sigma, cfg).value
    return AdditivityCheck(joint, parts, joint - parts, ent)


def swapped_ehs(e: CQEnsemble) -> BipartiteState:
    """EHS embedding with Alice holding the quantum register."""
    emb = ehs_embed(e)
    nx, d = e.size, e.dim
    t = emb.state.mat.reshape(nx, d, nx, d).transpose(1, 0, 3, 2)
    return BipartiteState(d, nx, DensityMatrix(t.reshape(nx * d, nx * d)))
