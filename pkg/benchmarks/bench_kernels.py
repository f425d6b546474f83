#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--events N]

Times coincidence matching and lag histogramming on synthetic streams sized
like a desk-scale Monte Carlo run. The two backends are bit-identical; this
script measures what the extension buys.
"""
import argparse
import time

import numpy as np

from qkdsim import _kernels_py

try:
    from qkdsim import _kernels
except ImportError:
    _kernels = None


def make_streams(n_alice: int, n_bob: int, duration_s: float, seed: int = 0):
    rng = np.random.default_rng(seed)
    alice = np.sort(rng.uniform(0.0, duration_s, n_alice))
    bob = np.sort(rng.uniform(0.0, duration_s, n_bob))
    return alice, bob


def time_call(fn, *args, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--events", type=int, default=2_000_000,
                        help="alice stream size (bob gets 1/20th)")
    args = parser.parse_args()

    duration = 2.0
    alice, bob = make_streams(args.events, args.events // 20, duration)
    tau = 1e-9
    max_lag, bin_s = 1e-6, 1e-9

    cases = [
        ("match_coincidences", lambda mod: time_call(
            mod.match_coincidences, alice, bob, tau, 0.0)),
        ("lag_histogram", lambda mod: time_call(
            mod.lag_histogram, alice, bob, max_lag, bin_s)),
    ]

    print(f"alice {alice.size} events, bob {bob.size} events over {duration} s")
    print(f"{'kernel':<20} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, runner in cases:
        t_py = runner(_kernels_py)
        if _kernels is None:
            print(f"{name:<20} {t_py*1e3:9.1f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_c = runner(_kernels)
        print(f"{name:<20} {t_py*1e3:9.1f}ms {t_c*1e3:9.1f}ms {t_py/t_c:7.1f}x")

    if _kernels is not None:
        ra = _kernels.match_coincidences(alice, bob, tau, 0.0)
        rb = _kernels_py.match_coincidences(alice, bob, tau, 0.0)
        assert np.array_equal(ra[0], rb[0]) and np.array_equal(ra[1], rb[1])
        print("backends agree bit-for-bit")


if __name__ == "__main__":
    main()
