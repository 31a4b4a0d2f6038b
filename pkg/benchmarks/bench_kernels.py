"""Compare the numba kernels against the numpy fallbacks.

Run: python3 benchmarks/bench_kernels.py [--repeat N]
Both backends are called directly, so LIPTREE_NUMBA does not need to change.
"""
import argparse
import time

import numpy as np

from liptree import _kernels
from liptree.gibbsmc import grid_graph
from liptree.treesampler import level_tables


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_psi(use_numba):
    x0 = np.zeros(64)
    return lambda: _kernels.psi_iterate(x0, 7, 20000, _kernels.norm_kind(7), tol=0.0,
                                        use_numba=use_numba)


def bench_expand(use_numba):
    tab = level_tables(6, 2)
    rng = np.random.default_rng(0)
    parent = np.full((20000, 32), -tab.offset, dtype=np.int64)
    u = rng.random((20000, 64))
    return lambda: _kernels.expand_level(parent, tab.cum[4], u, 2, 1, use_numba)


def bench_sweep(use_numba):
    g = grid_graph(20, 20).with_ab(0, 0)
    lo, hi = g.propagate()
    klo, khi = g.intervals()
    indptr, indices = g.csr()
    vals = np.tile(lo, (64, 1))
    u = np.random.default_rng(0).random((64, g.n))
    return lambda: _kernels.heat_bath_sweep(vals, indptr, indices, klo, khi, 1, u, use_numba)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.NUMBA_ENABLED:
        print("numba disabled; only the fallback is timed")
    print(f"{'kernel':<14}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}")
    for name, make in (("psi_iterate", bench_psi), ("expand_level", bench_expand),
                       ("heat_bath", bench_sweep)):
        slow = best_of(make(False), args.repeat)
        if _kernels.NUMBA_ENABLED:
            fast_fn = make(True)
            fast_fn()  # compile outside the timing
            fast = best_of(fast_fn, args.repeat)
            print(f"{name:<14}{slow:>12.4f}{fast:>12.4f}{slow / fast:>10.1f}")
        else:
            print(f"{name:<14}{slow:>12.4f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
