#!/usr/bin/env python3
"""Benchmark the compiled warping-distance kernel against the fallback.

The O(n*m) dynamic program is the hot loop of calibration and of every
pipeline step; this script times both backends on representative curve
lengths and checks they agree.

    python3 benchmarks/bench_dtw.py [--sizes 100 200 400] [--repeat 5]
"""

import argparse
import time

import numpy as np

from turnoutguard._dtw_py import dtw_cost as pure_python

try:
    from turnoutguard._dtw_cy import dtw_cost as compiled
except ImportError:
    compiled = None


def time_one(fn, a, b, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(a, b, -1)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400, 800])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'n':>5} {'pure-python':>14} {'compiled':>12} {'speedup':>9}")
    for n in args.sizes:
        a = np.ascontiguousarray(rng.uniform(0.0, 1000.0, n))
        b = np.ascontiguousarray(rng.uniform(0.0, 1000.0, n))
        t_py, r_py = time_one(pure_python, a, b, args.repeat)
        if compiled is None:
            print(f"{n:>5} {t_py * 1e3:>12.2f}ms {'(not built)':>12} {'-':>9}")
            continue
        t_cy, r_cy = time_one(compiled, a, b, args.repeat)
        assert abs(r_py - r_cy) < 1e-6 * max(1.0, abs(r_py)), "backends disagree"
        print(
            f"{n:>5} {t_py * 1e3:>12.2f}ms {t_cy * 1e3:>10.3f}ms "
            f"{t_py / t_cy:>8.0f}x"
        )
    if compiled is None:
        print("\ncompiled kernel unavailable; build with: python3 setup.py build_ext --inplace")


if __name__ == "__main__":
    main()
