"""Domain model for classical-quantum resources.

An ensemble pairs a probability vector p(x) with density matrices rho_x on a
d-dimensional space.  Classical registers can be embedded as orthonormal
diagonal blocks of a larger density matrix ("enlarged Hilbert space"), which
turns classical-quantum systems into ordinary quantum states and lets all
entropic quantities be computed with one set of tools.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadParam,
    DimensionMismatch,
    InvalidPovm,
    InvalidState,
    ParseError,
    SizeMismatch,
    UnknownName,
)
from .linalg import DensityMatrix, partial_trace_multi, pure_state

PROB_TOL = 1e-10
PRUNE_TOL = 1e-12


def prob_vector(p) -> np.ndarray:
    """Validate and return a probability vector as a float array."""
    a = np.asarray(p, dtype=float).ravel()
    if a.size == 0:
        raise InvalidState("empty probability vector")
    if a.min() < -PROB_TOL:
        raise InvalidState(f"negative probability {a.min():.3e}")
    if abs(a.sum() - 1.0) > PROB_TOL:
        raise InvalidState(f"probabilities sum to {a.sum()!r}")
    return np.clip(a, 0.0, None)


@dataclass
class CQEnsemble:
    """States rho_x with probabilities p(x) on a d-dimensional space."""

    probs: np.ndarray
    states: list[DensityMatrix]
    label: str = ""

    def __post_init__(self):
        self.probs = prob_vector(self.probs)
        if len(self.states) != self.probs.size:
            raise SizeMismatch("probability and state counts differ")
        dims = {s.dim for s in self.states}
        if len(dims) != 1:
            raise DimensionMismatch(f"states on different spaces: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def size(self) -> int:
        return self.probs.size

    def state_array(self) -> np.ndarray:
        """(|X|, d, d) complex array of the ensemble states."""
        return np.stack([s.mat for s in self.states])

    def average_state(self) -> DensityMatrix:
        avg = sum(p * s.mat for p, s in zip(self.probs, self.states))
        return DensityMatrix(avg)

    def is_pure(self, tol: float = 1e-8) -> bool:
        return all(
            np.trace(s.mat @ s.mat).real >= 1.0 - tol for s in self.states
        )


@dataclass
class AuxChannel:
    """Row-stochastic matrix Q(u|x): rows indexed by x, columns by u."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim != 2:
            raise DimensionMismatch("channel matrix must be 2-D")
        for row in a:
            prob_vector(row)
        self.matrix = np.clip(a, 0.0, None)

    @property
    def in_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def out_size(self) -> int:
        return self.matrix.shape[1]

    @staticmethod
    def identity(n: int, out_size: int | None = None) -> "AuxChannel":
        m = np.zeros((n, out_size or n))
        m[:n, :n] = np.eye(n)
        return AuxChannel(m)

    @staticmethod
    def constant(n: int, out_size: int = 1) -> "AuxChannel":
        m = np.zeros((n, out_size))
        m[:, 0] = 1.0
        return AuxChannel(m)

    @staticmethod
    def bsc(flip: float) -> "AuxChannel":
        return AuxChannel([[1 - flip, flip], [flip, 1 - flip]])


@dataclass
class BipartiteState:
    dim_a: int
    dim_b: int
    state: DensityMatrix

    def __post_init__(self):
        if self.state.dim != self.dim_a * self.dim_b:
            raise DimensionMismatch(
                f"state dim {self.state.dim} != {self.dim_a}*{self.dim_b}"
            )

    def reduced(self, keep: str) -> np.ndarray:
        sel = {"a": [0], "b": [1]}[keep]
        return partial_trace_multi(self.state, [self.dim_a, self.dim_b], sel)


@dataclass
class EhsState:
    """Block-diagonal embedding of classical registers next to a quantum one.

    Register order is ``classical_dims + [quantum_dim]`` in tensor order; the
    dense state carries exact zeros between distinct classical index tuples.
    """

    classical_dims: list[int]
    quantum_dim: int
    state: DensityMatrix

    def __post_init__(self):
        n = int(np.prod(self.classical_dims)) * self.quantum_dim
        if self.state.dim != n:
            raise DimensionMismatch(f"state dim {self.state.dim}, registers give {n}")

    @property
    def dims(self) -> list[int]:
        return list(self.classical_dims) + [self.quantum_dim]

    def reduced(self, keep: list[int]) -> np.ndarray:
        return partial_trace_multi(self.state, self.dims, keep)


def ehs_embed(e: CQEnsemble) -> EhsState:
    """Sum_x p(x) |x><x| (x) rho_x, block diagonal over the classical index."""
    nx, d = e.size, e.dim
    out = np.zeros((nx * d, nx * d), dtype=np.complex128)
    for x in range(nx):
        out[x * d:(x + 1) * d, x * d:(x + 1) * d] = e.probs[x] * e.states[x].mat
    return EhsState([nx], d, DensityMatrix(out))


def extend_with_channel(e: CQEnsemble, w: AuxChannel) -> EhsState:
    """Three-register state sum_{x,u} p(x) Q(u|x) |u><u| (x) |x><x| (x) rho_x."""
    if w.in_size != e.size:
        raise SizeMismatch(f"channel rows {w.in_size} != alphabet {e.size}")
    nu, nx, d = w.out_size, e.size, e.dim
    out = np.zeros((nu * nx * d, nu * nx * d), dtype=np.complex128)
    for u in range(nu):
        for x in range(nx):
            k = (u * nx + x) * d
            out[k:k + d, k:k + d] = e.probs[x] * w.matrix[x, u] * e.states[x].mat
    return EhsState([nu, nx], d, DensityMatrix(out))


def measure_ensemble(rho: BipartiteState, povm) -> CQEnsemble:
    """Ensemble left on the B side after measuring A with the given POVM.

    Outcomes with probability below 1e-12 are dropped and the remaining mass
    renormalized.
    """
    elements = getattr(povm, "elements", povm)
    da, db = rho.dim_a, rho.dim_b
    total = np.zeros((da, da), dtype=np.complex128)
    for el in elements:
        el = np.asarray(el, dtype=np.complex128)
        if el.shape != (da, da):
            raise InvalidPovm(f"element shape {el.shape}, expected {(da, da)}")
        total += el
    if np.max(np.abs(total - np.eye(da))) > 1e-8:
        raise InvalidPovm("POVM elements do not sum to identity")

    t = rho.state.mat.reshape(da, db, da, db)
    probs, states = [], []
    for el in elements:
        # Tr_A[(E (x) 1) rho]; the sqrt-sandwich form has the same B marginal
        tau = np.einsum("jm,majb->ab", np.asarray(el, dtype=np.complex128), t)
        p = float(np.trace(tau).real)
        if p < PRUNE_TOL:
            continue
        probs.append(p)
        # outcomes near the POVM boundary carry O(eps/p) eigenvalue noise
        states.append(DensityMatrix(tau / p, tol=max(1e-7, 1e-12 / p)))
    probs = np.asarray(probs)
    return CQEnsemble(probs / probs.sum(), states)


def _ket(*amps) -> np.ndarray:
    return np.asarray(amps, dtype=np.complex128)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Quasi-uniform points on the unit sphere (n, 3), Fibonacci lattice."""
    i = np.arange(n) + 0.5
    phi = np.pi * (1 + 5 ** 0.5) * i
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z ** 2)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def bloch_ket(nx: float, ny: float, nz: float) -> np.ndarray:
    theta = np.arccos(np.clip(nz, -1, 1))
    phi = np.arctan2(ny, nx)
    return _ket(np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2))


def named_ensemble(name: str, *params) -> CQEnsemble:
    """Constructors for the figure ensembles.

    two_state: {|0>, |+>} with p = 1/2 each.
    three_state: {|0>, |+>, |2>} in d = 3 with p = 1/3 each.
    bb84(theta): four pure qubit states at angles {0, theta, pi/2, -theta}.
    uniform_sphere(n): n-point Fibonacci discretization of the Bloch sphere.
    """
    if name == "two_state":
        states = [pure_state(_ket(1, 0)), pure_state(_ket(1, 1) / np.sqrt(2))]
        return CQEnsemble([0.5, 0.5], states, label="two_state")
    if name == "three_state":
        states = [
            pure_state(_ket(1, 0, 0)),
            pure_state(_ket(1, 1, 0) / np.sqrt(2)),
            pure_state(_ket(0, 0, 1)),
        ]
        return CQEnsemble([1 / 3] * 3, states, label="three_state")
    if name == "bb84":
        theta = float(params[0]) if params else np.pi / 8
        if not 0 < theta <= np.pi / 4 + 1e-12:
            raise BadParam(f"bb84 angle {theta} outside (0, pi/4]")
        c, s = np.cos(theta), np.sin(theta)
        states = [
            pure_state(_ket(1, 0)),
            pure_state(_ket(c, s)),
            pure_state(_ket(0, 1)),
            pure_state(_ket(-s, c)),
        ]
        return CQEnsemble([0.25] * 4, states, label=f"bb84({theta:.6g})")
    if name == "uniform_sphere":
        n = int(params[0]) if params else 64
        if n < 2:
            raise BadParam("uniform_sphere needs at least 2 points")
        states = [pure_state(bloch_ket(*v)) for v in fibonacci_sphere(n)]
        return CQEnsemble(np.full(n, 1.0 / n), states, label=f"uniform_sphere({n})")
    raise UnknownName(f"unknown ensemble {name!r}")


# --- file format -----------------------------------------------------------
#
# Ensemble files are JSON documents:
#   {"dim": d, "probs": [...], "states": [{"ket": [[re, im], ...]} |
#    {"dm": [[[re, im], ...], ...]}, ...], "label": "..."}
# Bipartite-state files: {"dim_a": ..., "dim_b": ..., "dm": [[[re, im],...]]}


def _complex_in(pairs) -> np.ndarray:
    a = np.asarray(pairs, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def _complex_out(a: np.ndarray):
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def load_ensemble(path) -> CQEnsemble:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        dim = int(doc["dim"])
        probs = doc["probs"]
        raw_states = doc["states"]
    except KeyError as exc:
        raise ParseError(f"{path}: missing field {exc}") from exc
    states = []
    for i, entry in enumerate(raw_states):
        if "ket" in entry:
            v = _complex_in(entry["ket"]).ravel()
            if v.size != dim:
                raise ParseError(f"{path}: state {i} has length {v.size}, dim {dim}")
            n = np.linalg.norm(v)
            if abs(n - 1.0) > 1e-6:
                raise ParseError(f"{path}: state {i} ket norm {n:.8f} too far from 1")
            states.append(pure_state(v / n))
        elif "dm" in entry:
            m = _complex_in(entry["dm"])
            if m.shape != (dim, dim):
                raise ParseError(f"{path}: state {i} shape {m.shape}, dim {dim}")
            try:
                states.append(DensityMatrix(m, tol=1e-7))
            except Exception as exc:
                raise ParseError(f"{path}: state {i}: {exc}") from exc
        else:
            raise ParseError(f"{path}: state {i} needs a 'ket' or 'dm' field")
    try:
        return CQEnsemble(probs, states, label=doc.get("label", ""))
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from exc


def save_ensemble(path, e: CQEnsemble):
    doc = {
        "dim": e.dim,
        "probs": [float(p) for p in e.probs],
        "states": [{"dm": _complex_out(s.mat)} for s in e.states],
    }
    if e.label:
        doc["label"] = e.label
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_bipartite(path) -> BipartiteState:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        dim_a, dim_b = int(doc["dim_a"]), int(doc["dim_b"])
        m = _complex_in(doc["dm"])
        return BipartiteState(dim_a, dim_b, DensityMatrix(m, tol=1e-7))
    except ParseError:
        raise
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from exc


def save_bipartite(path, rho: BipartiteState):
    doc = {"dim_a": rho.dim_a, "dim_b": rho.dim_b, "dm": _complex_out(rho.state.mat)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
