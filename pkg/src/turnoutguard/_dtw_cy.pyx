# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled warping-distance kernel: two-row dynamic program in C speed.

Must stay semantically identical to _dtw_py.dtw_cost; the test suite
cross-checks both backends.
"""

import numpy as np


def dtw_cost(double[::1] a, double[::1] b, Py_ssize_t band=-1):
    """Minimal accumulated |a_i - b_j| path cost; see _dtw_py.dtw_cost."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    cdef double inf = float("inf")
    cdef double[::1] prev = np.full(m + 1, inf)
    cdef double[::1] curr = np.full(m + 1, inf)
    cdef double[::1] tmp
    cdef Py_ssize_t i, j, lo, hi
    cdef double ai, d, best, step

    prev[0] = 0.0
    for i in range(1, n + 1):
        ai = a[i - 1]
        if band >= 0:
            lo = i - band
            if lo < 1:
                lo = 1
            hi = i + band
            if hi > m:
                hi = m
        else:
            lo = 1
            hi = m
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
        tmp = prev
        prev = curr
        curr = tmp
    return prev[m]
