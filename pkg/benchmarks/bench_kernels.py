"""Timing the batched Grassmann product: compiled table loop vs numpy.

Run with ``python3 benchmarks/bench_kernels.py``.  The backend is pinned
per measurement by calling the private loop functions directly, so one
process covers both paths regardless of SUPERHAAR_BACKEND.
"""

import time

import numpy as np

from superhaar import _kernels


def _bench(fn, a, b, table, repeats=5):
    fn(a, b, table)  # warm up (jit compile, cache fill)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(a, b, table)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"default backend: {_kernels.BACKEND}")
    try:
        mul_numba = _kernels._mul_numba or _kernels._build_numba_kernel()
    except ImportError:
        mul_numba = None
        print("numba not installed, timing the numpy path only")
    header = f"{'generators':>10} {'batch':>8} {'numpy':>12} {'numba':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    cases = [(4, 256), (4, 4096), (6, 256), (6, 4096), (8, 256), (8, 4096), (10, 256)]
    for n, batch in cases:
        table = _kernels.pair_table(n)
        shape = (batch, 1 << n)
        a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        b = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        t_np = _bench(_kernels._mul_numpy, a, b, table)
        if mul_numba is None:
            print(f"{n:>10} {batch:>8} {t_np * 1e3:>10.2f}ms {'n/a':>12}")
            continue
        ac, bc = np.ascontiguousarray(a), np.ascontiguousarray(b)
        t_nb = _bench(mul_numba, ac, bc, table)
        bad = np.abs(
            _kernels._mul_numpy(a, b, table) - mul_numba(ac, bc, table)
        ).max()
        assert bad < 1e-10, f"backends disagree by {bad}"
        print(
            f"{n:>10} {batch:>8} {t_np * 1e3:>10.2f}ms {t_nb * 1e3:>10.2f}ms"
            f" {t_np / t_nb:>8.1f}x"
        )


if __name__ == "__main__":
    main()
