"""Compare the compiled kernels against the pure-Python fallback.

Runs the Jacobi eigensolver, Cholesky factorization and triangular solve on
random symmetric positive definite matrices of increasing size and prints a
timing table.  Select the fallback globally with
``BREGMAN_PRECOND_BACKEND=python``; here both are imported directly so one
process covers both.

Usage: python benchmarks/bench_kernels.py [--sizes 50,100,200] [--repeats 3]
"""

import argparse
import time

import numpy as np

from bregman_precond import _kernels_py
from bregman_precond._backend import BACKEND

try:
    from bregman_precond import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def spd(n, seed):
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    a = rng.standard_normal((n, n))
    a = a @ a.T / n + np.eye(n)
    return a


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(kernels, n, repeats):
    a = spd(n, seed=n)
    b = np.ascontiguousarray(spd(n, seed=n + 1)[:, : max(1, n // 10)])

    def run_jacobi():
        work = np.array(a, order="C")
        v = np.eye(n)
        kernels.jacobi_eigh(work, v, 60, 1e-14)

    def run_chol():
        work = np.array(a, order="C")
        kernels.cholesky_lower(work)

    l = np.array(a, order="C")
    kernels.cholesky_lower(l)

    def run_trisolve():
        rhs = np.array(b, order="C")
        kernels.solve_triangular(l, rhs, False)

    return (
        time_call(run_jacobi, repeats),
        time_call(run_chol, repeats),
        time_call(run_trisolve, repeats),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="50,100,200")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(t) for t in args.sizes.split(",")]

    print(f"default backend: {BACKEND}")
    if _kernels_c is None:
        print("compiled extension unavailable; benchmarking the fallback only")
    header = f"{'n':>6} {'kernel':>12} {'python (s)':>12} {'compiled (s)':>13} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    names = ("jacobi_eigh", "cholesky", "tri_solve")
    for n in sizes:
        t_py = bench(_kernels_py, n, args.repeats)
        t_c = bench(_kernels_c, n, args.repeats) if _kernels_c else (None,) * 3
        for name, tp, tc in zip(names, t_py, t_c):
            if tc is None:
                print(f"{n:>6} {name:>12} {tp:>12.4e} {'-':>13} {'-':>8}")
            else:
                print(f"{n:>6} {name:>12} {tp:>12.4e} {tc:>13.4e} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
