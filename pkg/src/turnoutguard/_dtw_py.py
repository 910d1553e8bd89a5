"""Pure-Python warping-distance kernel.

Fallback used when the compiled extension is unavailable (or forced via
``TURNOUTGUARD_PURE_DTW=1``).  Same two-row dynamic program, same results,
orders of magnitude slower on long curves; see benchmarks/bench_dtw.py.
"""

import math


def dtw_cost(a, b, band=-1):
    """Minimal accumulated |a_i - b_j| path cost over the full cost matrix.

    Admissible moves are (i-1, j), (i, j-1), (i-1, j-1).  ``band`` >= 0
    restricts the path to |i - j| <= band (caller widens it to cover any
    length difference).  Keeps two rows of length len(b) + 1.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    n, m = len(a), len(b)
    inf = math.inf
    prev = [inf] * (m + 1)
    prev[0] = 0.0
    curr = [inf] * (m + 1)
    for i in range(1, n + 1):
        ai = a[i - 1]
        if band >= 0:
            lo = max(1, i - band)
            hi = min(m, i + band)
        else:
            lo, hi = 1, m
        curr[0] = inf
        for j in range(1, lo):
            curr[j] = inf
        for j in range(hi + 1, m + 1):
            curr[j] = inf
        for j in range(lo, hi + 1):
            d = ai - b[j - 1]
            if d < 0.0:
                d = -d
            best = prev[j]
            step = prev[j - 1]
            if step < best:
                best = step
            step = curr[j - 1]
            if step < best:
                best = step
            curr[j] = d + best
        prev, curr = curr, prev
    return prev[m]
