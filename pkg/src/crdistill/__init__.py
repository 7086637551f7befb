"""Common-randomness distillation from classical-quantum correlations.

Computes the distillable common randomness D(R) achievable from an ensemble
of quantum states under a limited one-way classical communication rate R,
the dual compression curve, measurement-optimized correlation measures for
bipartite states, and typical-sequence trace bounds at small blocklength.
"""

from ._kernels import BACKEND
from .ensembles import (
    AuxChannel,
    BipartiteState,
    CQEnsemble,
    EhsState,
    ehs_embed,
    extend_with_channel,
    load_bipartite,
    load_ensemble,
    measure_ensemble,
    named_ensemble,
    save_bipartite,
    save_ensemble,
)
from .info import (
    binary_entropy,
    cond_mutual_info,
    entanglement_entropy,
    holevo_chi,
    mutual_info_ux,
    mutual_info_uq,
    shannon_entropy,
    sw_point,
)
from .linalg import DensityMatrix, eig_hermitian, mat_sqrt_psd, partial_trace, pure_state, tensor, vn_entropy
from .config import SolverConfig
from .measurement import accessible_info, d1_infty
from .tradeoff import (
    CurvePoint,
    TradeoffCurve,
    eval_pair,
    solve_dstar,
    trace_curve,
    uniform_curve_closed_form,
)

__all__ = [
    "CurvePoint",
    "SolverConfig",
    "TradeoffCurve",
    "accessible_info",
    "d1_infty",
    "eval_pair",
    "solve_dstar",
    "trace_curve",
    "uniform_curve_closed_form",
    "BACKEND",
    "AuxChannel",
    "BipartiteState",
    "CQEnsemble",
    "DensityMatrix",
    "EhsState",
    "binary_entropy",
    "cond_mutual_info",
    "ehs_embed",
    "eig_hermitian",
    "entanglement_entropy",
    "extend_with_channel",
    "holevo_chi",
    "load_bipartite",
    "load_ensemble",
    "mat_sqrt_psd",
    "measure_ensemble",
    "mutual_info_ux",
    "mutual_info_uq",
    "named_ensemble",
    "partial_trace",
    "pure_state",
    "save_bipartite",
    "save_ensemble",
    "shannon_entropy",
    "sw_point",
    "tensor",
    "vn_entropy",
]

__version__ = "0.1.0"
