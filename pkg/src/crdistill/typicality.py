"""Typical sequences, typical projectors, and finite-blocklength checks.

Everything here works at small, exactly-computable blocklengths.  Projector
traces and retained spectral masses reduce to sums over letter-count types
in the per-letter eigenbasis, so no 2^n dense matrices are needed beyond
the explicitly bounded dense cross-checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

import numpy as np

from .ensembles import AuxChannel, CQEnsemble
from .errors import EnvelopeExceeded, LengthMismatch
from .info import shannon_entropy
from .linalg import eig_hermitian

DENSE_LIMIT_BITS = 24


@dataclass
class TypicalSetSpec:
    alphabet_size: int
    n: int
    delta: float
    distribution: np.ndarray

    def __post_init__(self):
        self.distribution = np.asarray(self.distribution, dtype=float)
        if self.n < 1:
            raise LengthMismatch(f"blocklength {self.n} < 1")
        if self.delta <= 0:
            raise LengthMismatch(f"delta {self.delta} must be positive")


def typical_membership(spec: TypicalSetSpec, word) -> bool:
    """True iff every letter count is within n*delta of its expectation."""
    word = np.asarray(word)
    if word.size != spec.n:
        raise LengthMismatch(f"word length {word.size} != n = {spec.n}")
    slack = spec.n * spec.delta
    for a in range(spec.alphabet_size):
        if abs(np.count_nonzero(word == a) - spec.n * spec.distribution[a]) > slack:
            return False
    return True


def _count_bounds(n: int, p: np.ndarray, delta: float):
    """Per-letter [lo, hi] integer count windows."""
    slack = n * delta
    lo = np.maximum(np.ceil(n * p - slack - 1e-9), 0).astype(int)
    hi = np.minimum(np.floor(n * p + slack + 1e-9), n).astype(int)
    return lo, hi


def _iter_types(n: int, lo, hi):
    """Count vectors summing to n inside the per-letter windows."""
    k = len(lo)

    def rec(i, remaining, prefix):
        if i == k - 1:
            if lo[i] <= remaining <= hi[i]:
                yield prefix + (remaining,)
            return
        tail_lo = int(np.sum(lo[i + 1:]))
        tail_hi = int(np.sum(hi[i + 1:]))
        for c in range(lo[i], hi[i] + 1):
            rem = remaining - c
            if tail_lo <= rem <= tail_hi:
                yield from rec(i + 1, rem, prefix + (c,))

    yield from rec(0, n, ())


def _multinomial(n: int, counts) -> int:
    out = factorial(n)
    for c in counts:
        out //= factorial(c)
    return out


def typical_set_size(spec: TypicalSetSpec):
    """Exact cardinality of the typical set, via a sum over types.

    Returns (count, log2 count); count 0 gives log2 value -inf.
    """
    lo, hi = _count_bounds(spec.n, spec.distribution, spec.delta)
    total = 0
    for t in _iter_types(spec.n, lo, hi):
        total += _multinomial(spec.n, t)
    return total, (float(np.log2(total)) if total else float("-inf"))


def typical_mass(spec: TypicalSetSpec) -> float:
    """Exact probability of the typical set under the spec's distribution."""
    lo, hi = _count_bounds(spec.n, spec.distribution, spec.delta)
    p = spec.distribution
    total = 0.0
    for t in _iter_types(spec.n, lo, hi):
        total += _multinomial(spec.n, t) * float(np.prod(p ** np.array(t)))
    return total


def conditionally_typical_membership(P, u_word, x_word, delta: float) -> bool:
    """Joint counts within n*delta of P(x|u) * N(u) for every (u, x) pair."""
    mat = np.asarray(getattr(P, "matrix", P), dtype=float)
    u_word = np.asarray(u_word)
    x_word = np.asarray(x_word)
    if u_word.size != x_word.size:
        raise LengthMismatch(f"lengths {u_word.size} != {x_word.size}")
    n = u_word.size
    slack = n * delta
    for u in range(mat.shape[0]):
        n_u = np.count_nonzero(u_word == u)
        xs = x_word[u_word == u]
        for x in range(mat.shape[1]):
            if abs(np.count_nonzero(xs == x) - mat[u, x] * n_u) > slack:
                return False
    return True


# --- projector handles -----------------------------------------------------


@dataclass
class ProjectorBlock:
    positions: list
    spectrum: np.ndarray  # eigenvalues of the per-letter state, descending
    basis: np.ndarray  # per-letter eigenvectors, columns
    delta: float


@dataclass
class ProjectorHandle:
    """Product of per-block typical projectors in per-letter eigenbases.

    Each block retains the eigen-index words typical for its spectrum; the
    full projector is their tensor product over the listed positions.
    """

    n: int
    blocks: list

    def trace(self):
        """Exact trace as an integer plus its log2."""
        total = 1
        for b in self.blocks:
            spec = TypicalSetSpec(len(b.spectrum), len(b.positions), b.delta, b.spectrum)
            c, _ = typical_set_size(spec)
            total *= c
        return total, (float(np.log2(total)) if total else float("-inf"))

    def own_mass(self) -> float:
        """Exact Tr[rho^(x)n Pi] when the state is the blocks' own letters."""
        mass = 1.0
        for b in self.blocks:
            spec = TypicalSetSpec(len(b.spectrum), len(b.positions), b.delta, b.spectrum)
            mass *= typical_mass(spec)
        return mass

    def dense(self) -> np.ndarray:
        """Dense matrix in the original product basis; small n only."""
        d = self.blocks[0].basis.shape[0]
        if self.n * np.log2(d) > DENSE_LIMIT_BITS / 2:
            raise EnvelopeExceeded("dense projector too large")
        pos_block = {}
        for b in self.blocks:
            for p in b.positions:
                pos_block[p] = b
        # retained eigen-index words, then rotate each factor
        per_block_words = []
        for b in self.blocks:
            m = len(b.positions)
            spec = TypicalSetSpec(len(b.spectrum), m, b.delta, b.spectrum)
            words = [w for w in itertools.product(range(len(b.spectrum)), repeat=m)
                     if typical_membership(spec, np.array(w))]
            per_block_words.append(words)
        dim = d ** self.n
        out = np.zeros((dim, dim), dtype=np.complex128)
        for combo in itertools.product(*per_block_words):
            letters = [None] * self.n
            for b, w in zip(self.blocks, combo):
                for p, idx in zip(b.positions, w):
                    letters[p] = b.basis[:, idx]
            ket = letters[0]
            for vec in letters[1:]:
                ket = np.kron(ket, vec)
            out += np.outer(ket, ket.conj())
        return out


def typical_projector(rho, n: int, delta: float) -> ProjectorHandle:
    """Typical projector of rho^(x)n in rho's eigenbasis."""
    spec = eig_hermitian(np.asarray(getattr(rho, "mat", rho)))
    return ProjectorHandle(
        n, [ProjectorBlock(list(range(n)), spec.eigenvalues, spec.eigenvectors, delta)]
    )


def cond_typical_projector(e: CQEnsemble, u_word, delta: float) -> ProjectorHandle:
    """Per-block typical projectors of rho_u on the index sets {i : u_i = u}."""
    u_word = np.asarray(u_word)
    blocks = []
    for u in range(e.size):
        pos = np.nonzero(u_word == u)[0].tolist()
        if not pos:
            continue
        spec = eig_hermitian(e.states[u].mat)
        blocks.append(ProjectorBlock(pos, spec.eigenvalues, spec.eigenvectors, delta))
    return ProjectorHandle(int(u_word.size), blocks)


# --- trace-bound verification ----------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.959964):
    """95% score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    ph = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    center = (ph + z2 / (2 * trials)) / denom
    half = z * np.sqrt(ph * (1 - ph) / trials + z2 / (4 * trials ** 2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class BoundRow:
    n: int
    delta: float
    quantity: str
    value: float
    ci_low: float
    ci_high: float


@dataclass
class TraceBoundReport:
    rows: list
    c_fit: float
    mass_nondecreasing: bool

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("n,delta,quantity,value,ci_low,ci_high\n")
            for r in self.rows:
                f.write(f"{r.n},{r.delta:.9g},{r.quantity},{r.value:.9g},"
                        f"{r.ci_low:.9g},{r.ci_high:.9g}\n")

    def summary(self) -> str:
        lines = [f"c_fit = {self.c_fit:.6f}",
                 f"retained mass nondecreasing: {self.mass_nondecreasing}"]
        for r in self.rows:
            lines.append(f"  n={r.n} {r.quantity} = {r.value:.6f}"
                         f" [{r.ci_low:.6f}, {r.ci_high:.6f}]")
        return "\n".join(lines)


def verify_trace_bounds(e: CQEnsemble, w: AuxChannel | None, n_list, delta: float,
                        trials: int, rng) -> TraceBoundReport:
    """Finite-n check of the typical-projector trace and mass bounds.

    For each n: exact log2-trace of the average-state typical projector with
    the fitted slope c_fit = ((1/n) log2 Tr - H) / delta; exact retained mass
    Tr[rho^(x)n Pi] by type sums plus a Bernoulli Monte Carlo cross-check
    with Wilson intervals; if a channel is given, the average conditional
    projector trace and mass over sampled u-words.
    """
    if max(n_list) * np.log2(e.dim) > DENSE_LIMIT_BITS:
        raise EnvelopeExceeded(f"blocklength {max(n_list)} beyond exact envelope")
    avg = e.average_state()
    spec_avg = eig_hermitian(avg.mat)
    h_avg = shannon_entropy(np.clip(spec_avg.eigenvalues, 0, None))

    rows = []
    masses = []
    c_fits = []
    for n in n_list:
        handle = typical_projector(avg, n, delta)
        _, log_tr = handle.trace()
        c_fit = (log_tr / n - h_avg) / delta
        c_fits.append(c_fit)
        rows.append(BoundRow(n, delta, "log2_trace_per_n", log_tr / n,
                             log_tr / n, log_tr / n))
        rows.append(BoundRow(n, delta, "c_fit", c_fit, c_fit, c_fit))

        mass = handle.own_mass()
        masses.append(mass)
        rows.append(BoundRow(n, delta, "retained_mass_exact", mass, mass, mass))

        # Bernoulli cross-check: sample eigen-index words from the spectrum
        p = np.clip(spec_avg.eigenvalues, 0, None)
        p = p / p.sum()
        tspec = TypicalSetSpec(p.size, n, delta, p)
        words = rng.choice(p.size, size=(trials, n), p=p)
        hits = sum(typical_membership(tspec, words[t]) for t in range(trials))
        lo, hi = wilson_interval(hits, trials)
        rows.append(BoundRow(n, delta, "retained_mass_mc", hits / trials, lo, hi))

        if w is not None:
            ext_probs = e.probs @ w.matrix  # p(u)
            cond_states = []
            for u in range(w.out_size):
                if ext_probs[u] < 1e-12:
                    cond_states.append(None)
                    continue
                post = e.probs * w.matrix[:, u] / ext_probs[u]
                mat = sum(q * s.mat for q, s in zip(post, e.states))
                cond_states.append(mat)
            ens_u = CQEnsemble(
                np.asarray([max(q, 0) for q in ext_probs]) / ext_probs.sum(),
                [type(e.states[0])(m) if m is not None else e.states[0]
                 for m in cond_states],
            )
            log_trs, cmasses = [], []
            for t in range(min(trials, 64)):
                u_word = rng.choice(w.out_size, size=n, p=ext_probs)
                ch = cond_typical_projector(ens_u, u_word, delta)
                _, lt = ch.trace()
                log_trs.append(lt / n)
                cmasses.append(ch.own_mass())
            rows.append(BoundRow(n, delta, "cond_log2_trace_per_n",
                                 float(np.mean(log_trs)),
                                 float(np.min(log_trs)), float(np.max(log_trs))))
            rows.append(BoundRow(n, delta, "cond_retained_mass",
                                 float(np.mean(cmasses)),
                                 float(np.min(cmasses)), float(np.max(cmasses))))

    nondec = all(b >= a - 1e-12 for a, b in zip(masses, masses[1:]))
    return TraceBoundReport(rows, float(np.max(c_fits)), nondec)


# --- entropy bound lemma ---------------------------------------------------


@dataclass
class LemmaReport:
    trials: int
    violations: int
    max_slack: float  # most negative margin seen (<= 0 means all passed)


def lemma3_check(dim: int, trials: int, rng) -> LemmaReport:
    """Randomized check of H(sigma) <= 1 + eps log2 D + (1-eps) log2(Tr B + 1)
    where eps = 1 - Tr(sigma B) and 0 <= B <= 1."""
    if dim > 16:
        raise EnvelopeExceeded(f"dimension {dim} > 16")
    worst = np.inf
    violations = 0
    for _ in range(trials):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        sigma = g @ g.conj().T
        sigma /= np.trace(sigma).real
        q = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        basis = np.linalg.qr(q)[0]
        bvals = rng.uniform(0.0, 1.0, size=dim)
        b = (basis * bvals) @ basis.conj().T
        eps = 1.0 - float(np.trace(sigma @ b).real)
        svals = np.clip(np.linalg.eigvalsh(sigma), 0, None)
        h = shannon_entropy(svals / svals.sum())
        bound = 1.0 + eps * np.log2(dim) + (1.0 - eps) * np.log2(
            float(np.trace(b).real) + 1.0
        )
        margin = bound - h
        worst = min(worst, margin)
        if margin < -1e-9:
            violations += 1
    return LemmaReport(trials, violations, float(-worst))


# --- constructive set extraction -------------------------------------------


@dataclass
class ExtractionResult:
    table: np.ndarray  # g: index of u-word per x-word, -1 for the sentinel
    u_words: list  # u-word per extracted class, in extraction order
    residual_mass: float
    h_x_given_g: float  # (1/n) H(X^n | g)
    h_q_given_g: float  # (1/n) sum_a P_a H(rho_a), blockwise ensemble entropy
    stalled: bool
    n: int
    targets: dict  # reference windows the diagnostics are compared against


def _all_words(k: int, n: int) -> np.ndarray:
    """All words over {0..k-1}^n as an (k^n, n) array, lexicographic."""
    out = np.indices((k,) * n).reshape(n, -1).T
    return out


def build_g(e: CQEnsemble, w: AuxChannel, n: int, delta: float,
            epsilon: float) -> ExtractionResult:
    """Greedy extraction of a classifying function g: X^n -> U^n.

    Repeatedly picks the typical u-word whose conditionally typical x-set
    carries the most residual probability, carves that set out, and stops
    when the residual mass drops to epsilon.  Remaining words map to a
    sentinel.  Diagnostics report the conditional entropies the construction
    is meant to pin down.
    """
    nx, nu = e.size, w.out_size
    if nx ** n > 2 ** 20:
        raise EnvelopeExceeded(f"|X|^n = {nx ** n} beyond the table envelope")
    px = e.probs
    pu = px @ w.matrix
    # reverse channel p(x|u) for the conditional typicality test
    rev = (px[:, None] * w.matrix).T
    rev = rev / np.maximum(rev.sum(axis=1, keepdims=True), 1e-300)

    x_words = _all_words(nx, n)
    log_px = np.log(np.clip(px, 1e-300, None))
    weights = np.exp(log_px[x_words].sum(axis=1))

    u_spec = TypicalSetSpec(nu, n, delta, pu)
    if nu ** n <= 2 ** 16:
        candidates = [u for u in _all_words(nu, n) if typical_membership(u_spec, u)]
    else:
        rng = np.random.default_rng(12345)
        seen = set()
        candidates = []
        for _ in range(4096):
            u = rng.choice(nu, size=n, p=pu)
            key = tuple(u)
            if key not in seen and typical_membership(u_spec, u):
                seen.add(key)
                candidates.append(u)
        candidates.sort(key=tuple)

    member_sets = []
    for u in candidates:
        mask = np.fromiter(
            (conditionally_typical_membership(rev, u, xw, delta) for xw in x_words),
            dtype=bool, count=len(x_words),
        )
        member_sets.append(mask)

    table = np.full(len(x_words), -1, dtype=np.int64)
    residual = np.ones(len(x_words), dtype=bool)
    u_used = []
    stalled = False
    total = weights.sum()
    while residual @ weights > epsilon * total:
        best_i, best_mass = -1, 0.0
        for i, mask in enumerate(member_sets):
            m = float(weights[mask & residual].sum())
            if m > best_mass + 1e-15:
                best_mass, best_i = m, i
        if best_i < 0:
            stalled = True
            break
        sel = member_sets[best_i] & residual
        table[sel] = len(u_used)
        u_used.append(np.asarray(candidates[best_i]))
        residual &= ~sel
        member_sets[best_i][:] = False

    res_mass = float(weights[residual].sum())
    # H(X^n | g) = H(X^n) - H(g) since g is a function of the word
    hx_n = float(-np.sum(weights * np.log2(np.clip(weights, 1e-300, None))))
    class_p = []
    for a in range(len(u_used)):
        class_p.append(float(weights[table == a].sum()))
    if res_mass > 0:
        class_p.append(res_mass)
    class_p = np.asarray(class_p)
    hg = shannon_entropy(class_p / class_p.sum())
    h_x_given_g = (hx_n - hg) / n

    h_q_given_g = _blockwise_cond_entropy(e, x_words, weights, table, u_used,
                                          residual) / n

    q_cond = 0.0  # H(Q|U) under the extension
    joint = px[:, None] * w.matrix
    for u in range(nu):
        if pu[u] < 1e-15:
            continue
        post = joint[:, u] / pu[u]
        mat = sum(q * s.mat for q, s in zip(post, e.states))
        vals = np.clip(np.linalg.eigvalsh(mat), 0, None)
        q_cond += pu[u] * shannon_entropy(vals / max(vals.sum(), 1e-300))
    hxu = float(shannon_entropy(joint.ravel()) - shannon_entropy(pu))

    return ExtractionResult(
        table, u_used, res_mass / total, h_x_given_g, h_q_given_g, stalled, n,
        {"h_x_given_u": hxu, "h_q_given_u": q_cond, "delta": delta},
    )


def _blockwise_cond_entropy(e, x_words, weights, table, u_used, residual):
    """sum_a P_a H(rho_a) for the class-average block states."""
    labels = sorted(set(table[table >= 0].tolist()))
    groups = [np.nonzero(table == a)[0] for a in labels]
    res_idx = np.nonzero(residual)[0]
    if res_idx.size:
        groups.append(res_idx)
    total = weights.sum()
    out = 0.0
    pure = e.is_pure()
    kets = None
    if pure:
        kets = []
        for s in e.states:
            vals, vecs = np.linalg.eigh(s.mat)
            kets.append(vecs[:, -1] * np.sqrt(max(vals[-1], 0.0)))
        overlaps = np.array([[np.vdot(a, b) for b in kets] for a in kets])
    for idx in groups:
        p_a = weights[idx].sum()
        if p_a < 1e-14:
            continue
        q = weights[idx] / p_a
        if pure:
            # Gram-matrix spectrum of sum_i q_i |phi_i><phi_i|
            sub = x_words[idx]
            g = np.ones((len(idx), len(idx)), dtype=np.complex128)
            for pos in range(sub.shape[1]):
                g *= overlaps[np.ix_(sub[:, pos], sub[:, pos])]
            g *= np.sqrt(q)[:, None] * np.sqrt(q)[None, :]
            vals = np.clip(np.linalg.eigvalsh(g), 0, None)
        else:
            d = e.dim
            n = x_words.shape[1]
            if n * np.log2(d) > 12:
                raise EnvelopeExceeded("mixed-state blocks beyond dense envelope")
            mat = np.zeros((d ** n, d ** n), dtype=np.complex128)
            for qi, row in zip(q, x_words[idx]):
                block = e.states[row[0]].mat
                for letter in row[1:]:
                    block = np.kron(block, e.states[letter].mat)
                mat += qi * block
            vals = np.clip(np.linalg.eigvalsh(mat), 0, None)
        out += p_a * shannon_entropy(vals / max(vals.sum(), 1e-300))
    return out / total
