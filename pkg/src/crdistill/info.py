"""Entropic functionals on ensembles and embedded classical registers.

Everything is in bits.  The channel-extension quantities I(U;X) and I(U;Q)
are computed ensemble-wise (O(|U| d^3)); the dense embedded-state route is
kept available through ``cond_mutual_info`` as a cross-check.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .ensembles import AuxChannel, BipartiteState, CQEnsemble, EhsState, prob_vector
from .errors import BadPartition, DomainError, NotPure, SizeMismatch
from .linalg import entropy_of_spectrum, purity, vn_entropy


def shannon_entropy(p) -> float:
    """H(p) = -sum p log2 p, with 0 log 0 = 0."""
    a = prob_vector(p)
    nz = a[a > 0]
    return float(-(nz * np.log2(nz)).sum())


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary_entropy argument {p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def holevo_chi(e: CQEnsemble) -> float:
    """chi = H(avg state) - avg H(rho_x)."""
    avg = vn_entropy(e.average_state())
    return avg - float(sum(p * vn_entropy(s) for p, s in zip(e.probs, e.states)))


def mutual_info_ux(p, w: AuxChannel) -> float:
    """Classical mutual information of the joint p(x) Q(u|x)."""
    px = prob_vector(p)
    if w.in_size != px.size:
        raise SizeMismatch(f"channel rows {w.in_size} != |X| {px.size}")
    joint = px[:, None] * w.matrix
    pu = joint.sum(axis=0)
    outer = px[:, None] * pu[None, :]
    mask = joint > 0
    return float((joint[mask] * np.log2(joint[mask] / outer[mask])).sum())


def mutual_info_uq(e: CQEnsemble, w: AuxChannel) -> float:
    """I(U;Q) = H(rho_bar) - sum_u p(u) H(rho_u) for the chain U -> X -> Q."""
    if w.in_size != e.size:
        raise SizeMismatch(f"channel rows {w.in_size} != alphabet {e.size}")
    rhos = e.state_array()
    out = vn_entropy(e.average_state())
    joint = e.probs[:, None] * w.matrix  # p(x, u)
    pu = joint.sum(axis=0)
    for u in range(w.out_size):
        if pu[u] <= 0:
            continue
        rho_u = np.einsum("x,xij->ij", joint[:, u] / pu[u], rhos)
        out -= pu[u] * vn_entropy(rho_u)
    return float(out)


def cond_mutual_info(s: EhsState, partition) -> float:
    """I(A;B|C) = H(AC) + H(BC) - H(ABC) - H(C) on an embedded state.

    ``partition`` is a triple of disjoint register-index lists (a, b, c); c
    may be empty.  Registers are indexed in tensor order, quantum last.
    """
    try:
        a, b, c = (list(g) for g in partition)
    except (TypeError, ValueError) as exc:
        raise BadPartition(f"partition must be three register groups: {exc}") from exc
    k = len(s.dims)
    groups = a + b + c
    if len(set(groups)) != len(groups) or any(not 0 <= i < k for i in groups):
        raise BadPartition(f"register groups {partition!r} invalid for {k} registers")

    def h(keep):
        if not keep:
            return 0.0
        return vn_entropy(s.reduced(sorted(keep)))

    return h(a + c) + h(b + c) - h(a + b + c) - h(c)


class SwPoint(NamedTuple):
    cr_rate: float  # C = H(X)
    comm_rate: float  # R = H(X|Q)
    distilled: float  # D = C - R = chi


def sw_point(e: CQEnsemble) -> SwPoint:
    """The point (C, R) = (H(X), H(X|Q)); its excess D equals chi."""
    hx = shannon_entropy(e.probs)
    chi = holevo_chi(e)
    return SwPoint(hx, hx - chi, chi)


def entanglement_entropy(psi: BipartiteState) -> float:
    """Entropy of the reduced state of a pure bipartite state."""
    if purity(psi.state) < 1.0 - 1e-8:
        raise NotPure(f"state purity {purity(psi.state):.6f} below 1 - 1e-8")
    w = np.linalg.eigvalsh(psi.reduced("a"))
    return entropy_of_spectrum(np.clip(w, 0.0, 1.0))
