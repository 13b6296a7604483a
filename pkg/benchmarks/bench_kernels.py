#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

The kernels dominate every Monte-Carlo risk estimate, so this is the number
that decides batch throughput.  Run:

    python3 benchmarks/bench_kernels.py

Set LATRISK_PURE_NUMPY=1 to check which path the package itself selects.
"""

import time

import numpy as np

from latrisk import kernels


def bench(fn, *args, repeat=5, warmup=1):
    for _ in range(warmup):
        fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def random_poses(rng, n, span=6.0):
    out = np.empty((n, 3))
    out[:, 0] = rng.uniform(-span, span, n)
    out[:, 1] = rng.uniform(-span, span, n)
    out[:, 2] = rng.uniform(-np.pi, np.pi, n)
    return out


def main():
    rng = np.random.default_rng(7)
    half_a = (2.25, 1.0)
    half_b = (2.25, 1.0)

    pose = np.array([0.0, 0.0, 0.3])
    big = random_poses(rng, 200_000)
    grid_poses = random_poses(rng, 2_000, span=3.0)
    samples = random_poses(rng, 20_000)
    rows = random_poses(rng, 200 * 100).reshape(200, 100, 3)
    row_egos = np.broadcast_to(pose, (200, 3)).copy()

    cases = [
        ("overlap_mask (1 ego vs 200k poses)",
         kernels.overlap_mask_numpy, (pose, half_a, big, half_b)),
        ("overlap_counts (2k egos x 20k samples)",
         kernels.overlap_counts_numpy, (grid_poses, half_a, samples, half_b)),
        ("rowwise_fraction (200 x 100 nested)",
         kernels.rowwise_overlap_fraction_numpy, (row_egos, half_a, rows, half_b)),
    ]
    numba_fns = {}
    if kernels.HAVE_NUMBA:
        numba_fns = {
            0: kernels.overlap_mask_numba,
            1: kernels.overlap_counts_numba,
            2: kernels.rowwise_overlap_fraction_numba,
        }

    print(f"numba available: {kernels.HAVE_NUMBA}; package path: "
          f"{'numba' if kernels.USING_NUMBA else 'numpy'}\n")
    print(f"{'kernel':42s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for i, (name, np_fn, args) in enumerate(cases):
        t_np = bench(np_fn, *args)
        if i in numba_fns:
            t_nb = bench(numba_fns[i], *args)
            print(f"{name:42s} {t_np * 1e3:8.2f}ms {t_nb * 1e3:8.2f}ms "
                  f"{t_np / t_nb:7.1f}x")
        else:
            print(f"{name:42s} {t_np * 1e3:8.2f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
