"""Benchmark the compiled SMO core against the pure-python fallback.

Builds random 2-class rbf problems of growing size, solves each with both
backends, reports wall-clock times and checks the solutions agree.

    python benchmarks/bench_backends.py [--sizes 200 400 800] [--reps 3]
"""

import argparse
import time

import numpy as np

from localtune.kernels import kernel_matrix
from localtune.smo import (DEFAULT_DUAL_RTOL, SWEEP_CAP_FACTOR,
                           _smo_sweeps_python, have_compiled)

if have_compiled():
    from localtune._smo import smo_sweeps as smo_sweeps_compiled
else:
    smo_sweeps_compiled = None


def make_problem(n: int, d: int, seed: int):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=n) > 0, 1.0, -1.0)
    K = np.ascontiguousarray(kernel_matrix("rbf", X, X, gamma=1.0 / d, coef0=0.0))
    return K, y


def run(impl, K, y, reps: int):
    best = float("inf")
    result = None
    for _ in range(reps):
        t0 = time.perf_counter()
        result = impl(K, y, 1.0, 1e-3, 5, SWEEP_CAP_FACTOR * K.shape[0],
                      DEFAULT_DUAL_RTOL)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 400, 800, 1600])
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if smo_sweeps_compiled is None:
        print("compiled core not built; nothing to compare against")
        return

    print(f"{'n':>6} {'python (s)':>12} {'compiled (s)':>13} {'speedup':>8}  agree")
    for n in args.sizes:
        K, y = make_problem(n, args.dim, args.seed)
        t_py, (a_py, b_py, s_py) = run(_smo_sweeps_python, K, y, args.reps)
        t_c, (a_c, b_c, s_c) = run(smo_sweeps_compiled, K, y, args.reps)
        agree = (np.array_equal(a_py, a_c) and b_py == b_c and s_py == s_c)
        print(f"{n:>6} {t_py:>12.4f} {t_c:>13.4f} {t_py / t_c:>8.1f}  {agree}")


if __name__ == "__main__":
    main()
