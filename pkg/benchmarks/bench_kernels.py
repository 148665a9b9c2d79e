"""Compare the compiled kernel against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

Times antisym_chain_sum and signed_trace_sum on the workloads that
dominate bracket evaluation (k matrices of size d). The compiled path
wins on small matrices where Python dispatch overhead dominates; BLAS
catches up as d grows, which is why kernel selection is size-gated.
"""

import argparse
import time

import numpy as np

from nambudyn._kernels import BACKEND, perm_table, _pure

try:
    from nambudyn._kernels import _native
except ImportError:
    _native = None


def _workload(k, d, seed=0):
    rng = np.random.default_rng(seed)
    mats = rng.normal(size=(k, d, d)) + 1j * rng.normal(size=(k, d, d))
    return np.ascontiguousarray(mats)


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    if _native is None:
        print("compiled kernel not available; only the numpy path can run")
        return

    print(f"active backend: {BACKEND}")
    header = f"{'kernel':18s} {'k':>2s} {'d':>3s} {'cython':>10s} {'numpy':>10s} {'speedup':>8s} {'agree':>9s}"
    print(header)
    print("-" * len(header))
    for name, native_fn, pure_fn in (
        ("antisym_chain_sum", _native.antisym_chain_sum, _pure.antisym_chain_sum),
        ("signed_trace_sum", _native.signed_trace_sum, _pure.signed_trace_sum),
    ):
        for k, d in ((2, 4), (3, 4), (4, 4), (4, 8), (5, 4), (5, 16), (3, 32)):
            mats = _workload(k, d)
            perms, signs = perm_table(k)
            t_nat = _time(lambda: native_fn(mats, perms, signs), args.repeats)
            t_pure = _time(lambda: pure_fn(mats, perms, signs), args.repeats)
            a = np.asarray(native_fn(mats, perms, signs))
            b = np.asarray(pure_fn(mats, perms, signs))
            agree = float(np.max(np.abs(a - b))) / max(1.0, float(np.max(np.abs(b))))
            print(
                f"{name:18s} {k:2d} {d:3d} {t_nat * 1e6:9.1f}u {t_pure * 1e6:9.1f}u "
                f"{t_pure / t_nat:7.2f}x {agree:9.1e}"
            )


if __name__ == "__main__":
    main()
