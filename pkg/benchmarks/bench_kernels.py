"""Timing comparison of the numba kernels against the numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--sizes small|large]

Both implementations are imported directly so the comparison does not
depend on the SPROD_NO_NUMBA flag. Each pair is checked with allclose
before timing, so a speedup number is only reported for matching output.
"""

import argparse
import time

import numpy as np

from sprod import _kernels as K

SMALL = [(200, 50, 16), (500, 500, 64)]
LARGE = [(2000, 2000, 128), (5000, 1000, 512)]


def timeit(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", choices=["small", "large"], default="small")
    args = parser.parse_args()

    if not K.USE_NUMBA:
        raise SystemExit("numba path is disabled (SPROD_NO_NUMBA set or numba missing)")

    cases = SMALL if args.sizes == "small" else SMALL + LARGE
    rng = np.random.default_rng(0)
    pairs = [
        ("sqdist_matrix", K._sqdist_matrix_nb, K._sqdist_matrix_np, 2),
        ("kth_nn_dist", K._kth_nn_dist_nb, K._kth_nn_dist_np, 3),
        ("dot_matrix", K._dot_matrix_nb, K._dot_matrix_np, 2),
    ]

    print(f"{'kernel':<14} {'shape':<20} {'numba (ms)':>12} {'numpy (ms)':>12} {'ratio':>8}")
    for n, m, d in cases:
        queries = rng.standard_normal((n, d))
        points = rng.standard_normal((m, d))
        for name, nb, npy, arity in pairs:
            call_args = (queries, points) if arity == 2 else (points, queries, 5)
            if not np.allclose(nb(*call_args), npy(*call_args), atol=1e-10):
                raise SystemExit(f"{name}: numba and numpy outputs diverge")
            t_nb = timeit(nb, *call_args)
            t_np = timeit(npy, *call_args)
            shape = f"{n}x{m}x{d}"
            print(f"{name:<14} {shape:<20} {t_nb * 1e3:>12.3f} {t_np * 1e3:>12.3f}"
                  f" {t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
