# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: coincidence matching and lag histogramming.

Must stay bit-identical to the NumPy reference in _kernels_py.py; the test
suite enforces equivalence on random and adversarial streams.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, floor

cnp.import_array()


def match_coincidences(alice_times, bob_times, double tau_s, double offset_s=0.0):
    """Greedy nearest-neighbour pairing of two sorted timestamp streams.

    Same contract as qkdsim._kernels_py.match_coincidences.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(
        alice_times, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(
        bob_times, dtype=np.float64) - offset_s
    cdef double half = tau_s / 2.0
    cdef Py_ssize_t n_a = a.shape[0]
    cdef Py_ssize_t n_b = b.shape[0]
    if n_a == 0 or n_b == 0:
        return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))

    cdef cnp.ndarray[cnp.uint8_t, ndim=1] used = np.zeros(n_b, dtype=np.uint8)
    cdef Py_ssize_t cap = n_a if n_a < n_b else n_b
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_a = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_b = np.empty(cap, dtype=np.int64)

    cdef Py_ssize_t i, j, best, n_out = 0, start = 0
    cdef double t, t_lo, t_hi, dt, best_dt
    for i in range(n_a):
        t = a[i]
        t_lo = t - half
        t_hi = t + half
        while start < n_b and (used[start] or b[start] < t_lo):
            start += 1
        if start >= n_b:
            break
        best = -1
        best_dt = INFINITY
        j = start
        while j < n_b and b[j] <= t_hi:
            if not used[j]:
                dt = fabs(b[j] - t)
                if dt < best_dt:
                    best_dt = dt
                    best = j
            j += 1
        if best >= 0:
            used[best] = 1
            out_a[n_out] = i
            out_b[n_out] = best
            n_out += 1
    return (out_a[:n_out].copy(), out_b[:n_out].copy())


def lag_histogram(alice_times, bob_times, double max_lag_s, double bin_s):
    """Histogram of pairwise time differences (bob - alice) within a lag window.

    Same contract as qkdsim._kernels_py.lag_histogram.
    """
    if bin_s <= 0 or max_lag_s <= 0:
        raise ValueError("max_lag_s and bin_s must be > 0")
    cdef Py_ssize_t n_bins = <Py_ssize_t>round(2.0 * max_lag_s / bin_s)
    if n_bins < 1:
        raise ValueError("lag window narrower than one bin")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(
        alice_times, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(
        bob_times, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(n_bins, dtype=np.int64)
    cdef Py_ssize_t n_a = a.shape[0]
    cdef Py_ssize_t n_b = b.shape[0]
    if n_a == 0 or n_b == 0:
        return counts

    cdef Py_ssize_t k, j, start = 0
    cdef double t, idx
    for k in range(n_b):
        t = b[k]
        while start < n_a and a[start] < t - max_lag_s:
            start += 1
        j = start
        while j < n_a and a[j] <= t + max_lag_s:
            idx = floor(((t - a[j]) + max_lag_s) / bin_s)
            if 0 <= idx < n_bins:
                counts[<Py_ssize_t>idx] += 1
            j += 1
    return counts
