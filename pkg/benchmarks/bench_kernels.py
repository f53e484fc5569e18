"""Compare the compiled and pure-Python element kernels.

Runs ``batch_force_tangent`` and ``batch_energy`` on a randomly deformed
chain of corotational beam elements at several mesh sizes, checks that both
backends agree to relative machine precision, and reports wall-time per call plus
the speedup factor.

Usage: python3 benchmarks/bench_kernels.py [--sizes 100,1000,10000] [--reps N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from snapspiral.kernels import BACKEND, python_impl

try:
    from snapspiral.kernels import _corotational_cy as cython_impl
except ImportError:  # pragma: no cover
    cython_impl = None


def make_case(n_elems: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    n_nodes = n_elems + 1
    t = np.linspace(0.0, 100.0, n_nodes)
    X = np.column_stack([t, 5.0 * np.sin(t / 17.0)])
    conn = np.column_stack([np.arange(n_elems), np.arange(1, n_elems + 1)])
    EA = np.full(n_elems, 28000.0)
    EI = np.full(n_elems, 1493.3)
    L0 = np.linalg.norm(X[conn[:, 1]] - X[conn[:, 0]], axis=1)
    u = 0.2 * rng.standard_normal(3 * n_nodes)
    return X, conn.astype(np.int64), EA, EI, L0, u


def time_call(fn, case, reps: int) -> float:
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*case)
        best = min(best, time.perf_counter() - t0)
    return best


def check_parity(case) -> float:
    f_py, k_py = python_impl.batch_force_tangent(*case)
    e_py = python_impl.batch_energy(*case)
    f_cy, k_cy = cython_impl.batch_force_tangent(*case)
    e_cy = cython_impl.batch_energy(*case)
    return max(
        float(np.max(np.abs(f_py - f_cy))) / float(np.max(np.abs(f_py))),
        float(np.max(np.abs(k_py - k_cy))) / float(np.max(np.abs(k_py))),
        float(np.max(np.abs(e_py - e_cy))) / float(np.max(np.abs(e_py))),
    )


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,1000,10000",
                    help="comma-separated element counts")
    ap.add_argument("--reps", type=int, default=20)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"active backend: {BACKEND}")
    if cython_impl is None:
        print("compiled kernel unavailable; timing python backend only")

    header = (f"{'elems':>8} {'py force+K':>12} {'cy force+K':>12} "
              f"{'speedup':>8} {'py energy':>11} {'cy energy':>11} "
              f"{'speedup':>8} {'rel diff':>11}")
    print(header)
    for n in sizes:
        case = make_case(n)
        t_py = time_call(python_impl.batch_force_tangent, case, args.reps)
        t_pe = time_call(python_impl.batch_energy, case, args.reps)
        if cython_impl is None:
            print(f"{n:>8} {t_py * 1e3:>10.3f}ms {'-':>12} {'-':>8} "
                  f"{t_pe * 1e3:>9.3f}ms {'-':>11} {'-':>8} {'-':>11}")
            continue
        t_cy = time_call(cython_impl.batch_force_tangent, case, args.reps)
        t_ce = time_call(cython_impl.batch_energy, case, args.reps)
        diff = check_parity(case)
        print(f"{n:>8} {t_py * 1e3:>10.3f}ms {t_cy * 1e3:>10.3f}ms "
              f"{t_py / t_cy:>7.1f}x {t_pe * 1e3:>9.3f}ms "
              f"{t_ce * 1e3:>9.3f}ms {t_pe / t_ce:>7.1f}x {diff:>11.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
