"""Timing comparison of the numba and pure-numpy kernel backends.

Run as:  python3 benchmarks/bench_kernels.py

Times the gradient-ascent inner loop and the exhaustive mesh sweep on the
built-in two-state and three-state ensembles under both backends.  The numba
path is imported directly; the numpy path uses the fallback module, so no
environment juggling is needed.
"""

import time

import numpy as np

from crdistill import named_ensemble
from crdistill._kernels import numpy_impl

try:
    from crdistill._kernels import numba_impl
except ImportError:
    numba_impl = None

from crdistill.tradeoff import _mesh_rows


def time_call(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_adam(impl, e, iters=3000):
    rng = np.random.default_rng(0)
    theta0 = np.ascontiguousarray(rng.normal(size=(e.size, e.size + 1)))
    return time_call(
        impl.adam_opt, theta0, e.probs, e.state_array(),
        1.5, 0.5, 0.0, 0.0, 0.0, 0.1, iters, 0.0, iters + 1,
    )


def bench_sweep(impl, e, mesh):
    rows = np.ascontiguousarray(_mesh_rows(mesh, e.size + 1))
    r_list = np.array([0.1, 0.2, 0.3])
    return time_call(
        impl.brute_sweep, e.probs, e.state_array(), rows, r_list, 1e-9, repeat=1
    )


def main():
    impls = [("numpy", numpy_impl)]
    if numba_impl is not None:
        impls.append(("numba", numba_impl))

    e2 = named_ensemble("two_state")
    e3 = named_ensemble("three_state")

    if numba_impl is not None:  # trigger compilation outside the timers
        bench_adam(numba_impl, e2, iters=10)
        bench_sweep(numba_impl, e2, 6)

    print(f"{'kernel':<28}" + "".join(f"{name:>12}" for name, _ in impls))
    rows = [
        ("adam 3000 iters, 2-state", lambda im: bench_adam(im, e2)[0]),
        ("adam 3000 iters, 3-state", lambda im: bench_adam(im, e3)[0]),
        ("mesh sweep 24, 2-state", lambda im: bench_sweep(im, e2, 24)[0]),
        ("mesh sweep 6, 3-state", lambda im: bench_sweep(im, e3, 6)[0]),
    ]
    for label, runner in rows:
        times = [runner(im) for _, im in impls]
        cells = "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        ratio = f"   ({times[0] / times[-1]:.1f}x)" if len(times) == 2 else ""
        print(f"{label:<28}{cells}{ratio}")


if __name__ == "__main__":
    main()
