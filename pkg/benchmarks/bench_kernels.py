#!/usr/bin/env python3
"""Benchmark the numba-compiled hot kernels against their pure-numpy twins.

Run:  python benchmarks/bench_kernels.py
(Use RMT_EQUIV_NO_NUMBA=1 to check that the library itself falls back; this
script imports both flavors directly and times them side by side.)
"""

import time

import numpy as np

from rmt_equiv import _kernels as K


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    rows = []

    eigs = rng.uniform(0.5, 2.0, 4096)
    args = (eigs, 8192.0, complex(-1e-4), 1e-13, 200_000, 0.5)
    rows.append(("delta_scm_iterate (p=4096, z=-1e-4)", "delta_scm_iterate", args))

    keigs = rng.uniform(0.0, 4.0, 4096)
    args = (keigs, 4096.0, 1024.0, 1e-4, 1e-13, 200_000, 1.0)
    rows.append(("delta_gram_iterate (n=4096, gamma=1e-4)", "delta_gram_iterate",
                 args))

    args = (np.clip(keigs, 1e-6, None), 0.25, 1e-13, 10_000)
    rows.append(("theta_bisect (n=4096)", "theta_bisect", args))

    A = rng.standard_normal((256, 2048))
    B = rng.standard_normal((256, 2048))
    args = (A.T @ B, np.linalg.norm(A, axis=0), np.linalg.norm(B, axis=0))
    rows.append(("relu_pair_kernel (2048 x 2048)", "relu_pair_kernel", args))

    if not K.HAS_NUMBA:
        print("numba unavailable or disabled; only the numpy flavor exists.")

    print(f"{'kernel':<45} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for label, name, args in rows:
        f_np = getattr(K, name + "_numpy")
        t_np = timeit(f_np, *args)
        if K.HAS_NUMBA:
            f_jit = getattr(K, name + "_jit")
            f_jit(*args)  # compile outside the timed region
            t_jit = timeit(f_jit, *args)
            print(f"{label:<45} {t_np * 1e3:>8.2f}ms {t_jit * 1e3:>8.2f}ms "
                  f"{t_np / t_jit:>7.1f}x")
        else:
            print(f"{label:<45} {t_np * 1e3:>8.2f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
