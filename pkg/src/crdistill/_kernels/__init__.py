"""Backend selection for the hot numeric kernels.

The numba backend is used when available; set ``CRDISTILL_NO_NUMBA=1`` to
force the pure-numpy fallback (same functions, same results, slower).
"""

from __future__ import annotations

import os

from . import numpy_impl

_FORCE_NUMPY = os.environ.get("CRDISTILL_NO_NUMBA", "").strip() not in ("", "0")

if _FORCE_NUMPY:
    impl = numpy_impl
    BACKEND = "numpy"
else:
    try:
        from . import numba_impl as impl  # noqa: F401

        BACKEND = "numba"
    except ImportError:
        impl = numpy_impl
        BACKEND = "numpy"

softmax_rows = impl.softmax_rows
mutual_infos = impl.mutual_infos
rate_gain = impl.rate_gain
objective_grad = impl.objective_grad
adam_opt = impl.adam_opt
brute_sweep = impl.brute_sweep
avg_state_entropy = impl.avg_state_entropy
