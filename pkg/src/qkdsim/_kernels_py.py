"""NumPy implementations of the hot kernels.

Semantics here are the reference: the compiled extension in _kernels.pyx must
produce bit-identical output. Both are selected through qkdsim.kernels.
"""
from __future__ import annotations

import numpy as np


def match_coincidences(
    alice_times: np.ndarray,
    bob_times: np.ndarray,
    tau_s: float,
    offset_s: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy nearest-neighbour pairing of two sorted timestamp streams.

    Walking the first stream in time order, each event claims the closest
    still-unclaimed event of the second stream within +-tau_s/2 (after
    shifting the second stream by offset_s); ties go to the earlier
    candidate. Each event is used at most once. Returns index arrays
    (into alice_times, into bob_times) of the matched pairs, ordered by the
    first stream.
    """
    a = np.ascontiguousarray(alice_times, dtype=np.float64)
    b = np.ascontiguousarray(bob_times, dtype=np.float64) - offset_s
    half = tau_s / 2.0
    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
    if a.size == 0 or b.size == 0:
        return empty
    lo = np.searchsorted(b, a - half, side="left")
    hi = np.searchsorted(b, a + half, side="right")
    candidates = np.nonzero(hi > lo)[0]
    if candidates.size == 0:
        return empty
    used = np.zeros(b.size, dtype=bool)
    out_a = []
    out_b = []
    for i in candidates:
        t = a[i]
        best = -1
        best_dt = np.inf
        for j in range(lo[i], hi[i]):
            if used[j]:
                continue
            dt = abs(b[j] - t)
            if dt < best_dt:
                best_dt = dt
                best = j
        if best >= 0:
            used[best] = True
            out_a.append(i)
            out_b.append(best)
    return np.asarray(out_a, dtype=np.int64), np.asarray(out_b, dtype=np.int64)


def lag_histogram(
    alice_times: np.ndarray,
    bob_times: np.ndarray,
    max_lag_s: float,
    bin_s: float,
) -> np.ndarray:
    """Histogram of pairwise time differences (bob - alice) within a lag window.

    Bin k covers [-max_lag_s + k*bin_s, -max_lag_s + (k+1)*bin_s); differences
    at exactly +max_lag_s fall outside. The number of bins is
    round(2*max_lag_s/bin_s).
    """
    if bin_s <= 0 or max_lag_s <= 0:
        raise ValueError("max_lag_s and bin_s must be > 0")
    n_bins = int(round(2.0 * max_lag_s / bin_s))
    if n_bins < 1:
        raise ValueError("lag window narrower than one bin")
    a = np.ascontiguousarray(alice_times, dtype=np.float64)
    b = np.ascontiguousarray(bob_times, dtype=np.float64)
    counts = np.zeros(n_bins, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return counts
    lo = np.searchsorted(a, b - max_lag_s, side="left")
    hi = np.searchsorted(a, b + max_lag_s, side="right")
    span = hi - lo
    total = int(span.sum())
    if total == 0:
        return counts
    starts = np.cumsum(span) - span
    flat = (
        np.arange(total, dtype=np.int64)
        - np.repeat(starts, span)
        + np.repeat(lo, span)
    )
    diffs = np.repeat(b, span) - a[flat]
    idx = np.floor((diffs + max_lag_s) / bin_s)
    valid = (idx >= 0) & (idx < n_bins)
    np.add.at(counts, idx[valid].astype(np.int64), 1)
    return counts
