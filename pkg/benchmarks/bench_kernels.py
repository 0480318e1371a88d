#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot kernels (per-node SGD training, pairwise cluster-distance
matrix) on workloads shaped like a 100-node 30-round run, checks the paths
agree numerically, and prints a speedup table. Run from the repo root:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from scalesim import kernels

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_sgd(numba_sgd):
    # one node's per-round workload: ~5 train examples, 5 epochs, batch 16,
    # called 3000 times per 100x30 run
    rng = np.random.default_rng(0)
    n, d, epochs = 5, 30, 5
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    w0 = np.zeros(d)
    perms = np.stack([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)
    args = (X, y, w0, 0.0, perms, 0.01, 0.001, 16)
    calls = 3000

    def run_np():
        for _ in range(calls):
            kernels._sgd_epochs_np(*args)

    results = {"numpy": timeit(run_np, 3)}
    if numba_sgd is not None:
        numba_sgd(*args)  # compile outside the timed region

        def run_nb():
            for _ in range(calls):
                numba_sgd(*args)

        results["numba"] = timeit(run_nb, 3)
        w_np, b_np = kernels._sgd_epochs_np(*args)
        w_nb, b_nb = numba_sgd(*args)
        assert np.allclose(w_np, w_nb, rtol=1e-9) and abs(b_np - b_nb) < 1e-9
    return f"sgd_epochs x{calls}", results


def bench_distance(numba_dist):
    rng = np.random.default_rng(1)
    n = 500
    ds = rng.random(n)
    pi = rng.random(n)
    lat = np.radians(rng.uniform(-60, 60, n))
    lon = np.radians(rng.uniform(-170, 170, n))
    args = (ds, pi, lat, lon, 0.4, 0.2, 0.4, 1000.0)

    results = {"numpy": timeit(lambda: kernels._mixed_distance_matrix_np(*args), 5)}
    if numba_dist is not None:
        numba_dist(*args)
        results["numba"] = timeit(lambda: numba_dist(*args), 5)
        assert np.allclose(kernels._mixed_distance_matrix_np(*args), numba_dist(*args),
                           rtol=1e-12)
    return f"mixed_distance_matrix n={n}", results


def main() -> int:
    print(f"selected backend: {kernels.BACKEND}")
    if HAS_NUMBA:
        numba_sgd = njit(cache=True)(kernels._sgd_epochs_loops)
        numba_dist = njit(cache=True)(kernels._mixed_distance_matrix_loops)
    else:
        numba_sgd = numba_dist = None
        print("numba not importable; timing the numpy path only")

    rows = [bench_sgd(numba_sgd), bench_distance(numba_dist)]
    print(f"{'kernel':<32} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, results in rows:
        np_t = results["numpy"]
        if "numba" in results:
            nb_t = results["numba"]
            print(f"{name:<32} {np_t * 1e3:>8.1f}ms {nb_t * 1e3:>8.1f}ms {np_t / nb_t:>8.1f}x")
        else:
            print(f"{name:<32} {np_t * 1e3:>8.1f}ms {'-':>10} {'-':>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
