"""Dense complex-matrix kernel: Hermitian eigendecompositions, tensor
products, partial traces and numerically safe entropy evaluation.

All matrices are plain ``numpy`` arrays (complex128).  Density operators get
a thin validating wrapper so that downstream code can rely on Hermiticity,
unit trace and positivity without re-checking.  Entropies are in bits.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidState,
    NegativeEigenvalue,
    NonHermitianInput,
)

HERMITIAN_TOL = 1e-8
STATE_TOL = 1e-10
LOG2 = np.log(2.0)


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - dagger(m))) <= tol)


class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace complex matrix."""

    __slots__ = ("mat", "dim")

    def __init__(self, mat, tol: float = STATE_TOL):
        a = as_matrix(mat)
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got {a.shape}")
        if np.max(np.abs(a - dagger(a))) > tol:
            raise NonHermitianInput("density matrix is not Hermitian")
        if abs(np.trace(a).real - 1.0) > tol or abs(np.trace(a).imag) > tol:
            raise InvalidState(f"trace is {np.trace(a)}, expected 1")
        w = np.linalg.eigvalsh((a + dagger(a)) / 2)
        if w.min() < -tol:
            raise NegativeEigenvalue(f"smallest eigenvalue {w.min():.3e}")
        self.mat = (a + dagger(a)) / 2
        self.dim = a.shape[0]

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)


def pure_state(ket) -> DensityMatrix:
    """Density matrix |v><v| of a (normalized) ket."""
    v = np.asarray(ket, dtype=np.complex128).ravel()
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidState("zero ket")
    v = v / n
    return DensityMatrix(np.outer(v, v.conj()))


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # columns, matching order


def eig_hermitian(m) -> Spectrum:
    """Full spectral decomposition of a Hermitian matrix.

    Eigenvalues are returned real and in descending order; the eigenvector
    columns are reordered to match.
    """
    a = as_matrix(m) if not isinstance(m, DensityMatrix) else m.mat
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    if not is_hermitian(a):
        raise NonHermitianInput("input exceeds Hermitian symmetry tolerance")
    w, v = np.linalg.eigh((a + dagger(a)) / 2)
    order = np.argsort(w)[::-1]
    return Spectrum(w[order].astype(float), v[:, order])


def entropy_of_spectrum(w: Sequence[float]) -> float:
    """-sum(p log2 p) with clamping of small negatives and renormalization.

    Eigenvalues in [-1e-10, 0) are set to 0, then the spectrum is rescaled
    to sum 1; this absorbs the round-off of finite-precision eigensolvers.
    """
    p = np.asarray(w, dtype=float)
    p = np.where(p < 0, 0.0, p)
    s = p.sum()
    if s <= 0:
        return 0.0
    p = p / s
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def vn_entropy(rho) -> float:
    """von Neumann entropy -Tr(rho log2 rho) in bits."""
    if isinstance(rho, DensityMatrix):
        a = rho.mat
    else:
        a = as_matrix(rho)
    w = np.linalg.eigvalsh((a + dagger(a)) / 2)
    w = np.clip(w, 0.0, 1.0)
    return entropy_of_spectrum(w)


def tensor(*ms) -> np.ndarray:
    """Kronecker product of any number of matrices."""
    out = np.eye(1, dtype=np.complex128)
    for m in ms:
        a = m.mat if isinstance(m, DensityMatrix) else as_matrix(m)
        out = np.kron(out, a)
    return out


def partial_trace(m, dim_a: int, dim_b: int, keep: str | int) -> np.ndarray:
    """Trace out one factor of a (dim_a*dim_b)-dimensional operator.

    ``keep`` selects the retained subsystem: "a"/0 or "b"/1.
    """
    a = m.mat if isinstance(m, DensityMatrix) else as_matrix(m)
    n = dim_a * dim_b
    if a.shape != (n, n):
        raise DimensionMismatch(f"expected {n}x{n}, got {a.shape}")
    t = a.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep in ("a", 0):
        return np.einsum("ikjk->ij", t)
    if keep in ("b", 1):
        return np.einsum("kikj->ij", t)
    raise DimensionMismatch(f"unknown subsystem selector {keep!r}")


def partial_trace_multi(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduce an operator on a multi-register space to the kept registers.

    ``dims`` lists the register dimensions in tensor order; ``keep`` is the
    sorted index list of registers to retain.
    """
    a = m.mat if isinstance(m, DensityMatrix) else as_matrix(m)
    dims = list(dims)
    n = int(np.prod(dims))
    if a.shape != (n, n):
        raise DimensionMismatch(f"expected {n}x{n}, got {a.shape}")
    k = len(dims)
    keep = sorted(keep)
    t = a.reshape(dims + dims)
    # contract the discarded registers pairwise
    traced = 0
    for i in range(k):
        if i not in keep:
            pos = i - traced
            t = np.trace(t, axis1=pos, axis2=pos + (k - traced))
            traced += 1
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def mat_sqrt_psd(m) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition."""
    a = m.mat if isinstance(m, DensityMatrix) else as_matrix(m)
    if not is_hermitian(a):
        raise NonHermitianInput("matrix square root requires a Hermitian input")
    w, v = np.linalg.eigh((a + dagger(a)) / 2)
    if w.min() < -1e-8:
        raise NegativeEigenvalue(f"eigenvalue {w.min():.3e} below tolerance")
    w = np.where(w < 0, 0.0, w)
    return (v * np.sqrt(w)) @ dagger(v)


def purity(rho) -> float:
    a = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
    return float(np.trace(a @ a).real)
