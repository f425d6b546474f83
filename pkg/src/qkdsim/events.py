"""Photon-event Monte Carlo: stream generation, coincidence analysis and
clock-offset recovery.

Generates time-stamped detector clicks for the ground station (alice) and the
satellite (bob) from the scenario's rates and losses, then estimates
coincidence rate, QBER and visibility from the streams alone. The estimators
deliberately ignore each event's origin label, which exists purely for
diagnostics; this keeps the Monte Carlo an independent check of the analytic
rate model.

A stream is a set of parallel arrays rather than event objects: desk-scale
runs reach millions of events.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import kernels

EVENT_BUDGET = int(1e8)
"""Hard cap on expected generated events, to bound memory."""

BASIS_HV = 0
BASIS_DA = 1
ORIGIN_SIGNAL = 0
ORIGIN_DARK = 1
ORIGIN_BACKGROUND = 2

_ORIGIN_NAMES = {ORIGIN_SIGNAL: "signal", ORIGIN_DARK: "dark", ORIGIN_BACKGROUND: "background"}
_BASIS_NAMES = {BASIS_HV: "HV", BASIS_DA: "DA"}


class EventBudgetError(RuntimeError):
    """Requested simulation would generate more events than the budget."""


class UndefinedMetricError(ValueError):
    """No sifted pairs: QBER and visibility are undefined."""


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo run. The seed fully determines the output.

    pair_rate_cps is the entangled-pair production rate; eta_a / eta_b are
    the end-to-end detection probabilities per photon on each side. Noise
    rates mirror the analytic model: n_det * d_X_cps dark counts per side
    plus b_cps background on bob. jitter_sigma_s is applied per detection,
    so the pair-difference spread is sqrt(2) times it. Bob's clock is
    transformed as t -> (1 + 1e-9 * clock_drift_ppb) * t + clock_offset_s.
    """

    pair_rate_cps: float = 1e6
    duration_s: float = 1.0
    eta_a: float = 0.6
    eta_b: float = 0.01
    n_det: int = 4
    d_a_cps: float = 100.0
    d_b_cps: float = 100.0
    b_cps: float = 400.0
    e_d: float = 0.01
    jitter_sigma_s: float = 100e-12 / math.sqrt(2.0)
    clock_offset_s: float = 0.0
    clock_drift_ppb: float = 0.0
    rng_seed: int = 12345

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError(f"duration_s must be > 0, got {self.duration_s}")
        for name in ("pair_rate_cps", "d_a_cps", "d_b_cps", "b_cps", "jitter_sigma_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("eta_a", "eta_b"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {getattr(self, name)}")
        if not 0.0 <= self.e_d <= 0.5:
            raise ValueError(f"e_d must be in [0, 0.5], got {self.e_d}")
        if self.n_det < 1:
            raise ValueError(f"n_det must be >= 1, got {self.n_det}")


@dataclass(frozen=True)
class DetectionEvent:
    """Scalar view of one detector click."""

    time_s: float
    channel: str
    basis: str
    outcome: int
    origin: str


class EventStream:
    """Time-sorted detector clicks of one channel, as parallel arrays.

    origin is diagnostic only; estimation functions never read it and accept
    streams whose origin is None.
    """

    def __init__(
        self,
        channel: str,
        times: np.ndarray,
        basis: np.ndarray,
        outcome: np.ndarray,
        origin: np.ndarray | None,
        duration_s: float,
    ) -> None:
        self.channel = channel
        self.times = np.asarray(times, dtype=np.float64)
        self.basis = np.asarray(basis, dtype=np.uint8)
        self.outcome = np.asarray(outcome, dtype=np.uint8)
        self.origin = None if origin is None else np.asarray(origin, dtype=np.uint8)
        self.duration_s = float(duration_s)

    def __len__(self) -> int:
        return int(self.times.size)

    def without_origin(self) -> "EventStream":
        return EventStream(
            self.channel, self.times, self.basis, self.outcome, None, self.duration_s
        )

    def events(self) -> Iterator[DetectionEvent]:
        origin = self.origin
        for i in range(len(self)):
            yield DetectionEvent(
                time_s=float(self.times[i]),
                channel=self.channel,
                basis=_BASIS_NAMES[int(self.basis[i])],
                outcome=int(self.outcome[i]),
                origin="?" if origin is None else _ORIGIN_NAMES[int(origin[i])],
            )


@dataclass(frozen=True)
class StreamMetrics:
    """Estimates from matched streams, with one-sigma statistical errors."""

    n_coincidences: int
    coincidence_rate_cps: float
    coincidence_rate_sigma: float
    n_sifted: int
    qber: float
    qber_sigma: float
    visibility: float
    visibility_sigma: float


@dataclass(frozen=True)
class BlockOffset:
    """Clock offset recovered from one correlation block."""

    t_center_s: float
    offset_s: float
    peak_counts: int
    significance: float
    locked: bool


def _expected_events(cfg: SimConfig) -> float:
    pairs = cfg.pair_rate_cps * cfg.duration_s
    noise_a = cfg.n_det * cfg.d_a_cps * cfg.duration_s
    noise_b = (cfg.n_det * cfg.d_b_cps + cfg.b_cps) * cfg.duration_s
    return pairs * (1.0 + cfg.eta_a + cfg.eta_b) + noise_a + noise_b


def simulate_streams(cfg: SimConfig) -> tuple[EventStream, EventStream]:
    """Generate one alice and one bob stream from a common pair process.

    Pairs occur as a Poisson process; each is detected independently on the
    two sides. Basis choice is a fair coin per detection (beam-splitter).
    When both sides detect in the same basis, outcomes agree except with
    probability e_d; otherwise outcomes are fair coins. Dark and background
    clicks are independent Poisson processes with coin-flip basis/outcome.
    Every timestamp gets Gaussian jitter, bob's clock transform is applied,
    events pushed below t=0 by jitter are dropped, and streams are
    time-sorted.
    """
    if _expected_events(cfg) > EVENT_BUDGET:
        raise EventBudgetError(
            f"expected events {_expected_events(cfg):.3g} exceed budget {EVENT_BUDGET:.3g}; "
            "reduce pair_rate_cps or duration_s"
        )
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(7)
    rng_pairs, rng_det, rng_bits, rng_noise_a, rng_noise_b, rng_jit_a, rng_jit_b = (
        np.random.default_rng(s) for s in seeds
    )

    n_pairs = rng_pairs.poisson(cfg.pair_rate_cps * cfg.duration_s)
    t_pairs = np.sort(rng_pairs.uniform(0.0, cfg.duration_s, n_pairs))
    det_a = rng_det.random(n_pairs) < cfg.eta_a
    det_b = rng_det.random(n_pairs) < cfg.eta_b
    basis_a = rng_bits.integers(0, 2, n_pairs, dtype=np.uint8)
    basis_b = rng_bits.integers(0, 2, n_pairs, dtype=np.uint8)
    outcome_a = rng_bits.integers(0, 2, n_pairs, dtype=np.uint8)
    flips = (rng_bits.random(n_pairs) < cfg.e_d).astype(np.uint8)
    random_out = rng_bits.integers(0, 2, n_pairs, dtype=np.uint8)
    outcome_b = np.where(basis_a == basis_b, outcome_a ^ flips, random_out).astype(np.uint8)

    def noise(rng: np.random.Generator, rate: float, origin_code: int):
        n = rng.poisson(rate * cfg.duration_s)
        times = rng.uniform(0.0, cfg.duration_s, n)
        basis = rng.integers(0, 2, n, dtype=np.uint8)
        outcome = rng.integers(0, 2, n, dtype=np.uint8)
        return times, basis, outcome, np.full(n, origin_code, dtype=np.uint8)

    dark_a = noise(rng_noise_a, cfg.n_det * cfg.d_a_cps, ORIGIN_DARK)
    dark_b = noise(rng_noise_b, cfg.n_det * cfg.d_b_cps, ORIGIN_DARK)
    bg_b = noise(rng_noise_b, cfg.b_cps, ORIGIN_BACKGROUND)

    t_a = np.concatenate([t_pairs[det_a], dark_a[0]])
    s_a = np.concatenate([basis_a[det_a], dark_a[1]])
    o_a = np.concatenate([outcome_a[det_a], dark_a[2]])
    g_a = np.concatenate([np.zeros(int(det_a.sum()), dtype=np.uint8), dark_a[3]])

    t_b = np.concatenate([t_pairs[det_b], dark_b[0], bg_b[0]])
    s_b = np.concatenate([basis_b[det_b], dark_b[1], bg_b[1]])
    o_b = np.concatenate([outcome_b[det_b], dark_b[2], bg_b[2]])
    g_b = np.concatenate([np.zeros(int(det_b.sum()), dtype=np.uint8), dark_b[3], bg_b[3]])

    if cfg.jitter_sigma_s > 0:
        t_a = t_a + rng_jit_a.normal(0.0, cfg.jitter_sigma_s, t_a.size)
        t_b = t_b + rng_jit_b.normal(0.0, cfg.jitter_sigma_s, t_b.size)
    t_b = (1.0 + 1e-9 * cfg.clock_drift_ppb) * t_b + cfg.clock_offset_s

    def finish(channel, t, s, o, g):
        keep = t >= 0.0
        t, s, o, g = t[keep], s[keep], o[keep], g[keep]
        order = np.argsort(t, kind="stable")
        return EventStream(channel, t[order], s[order], o[order], g[order], cfg.duration_s)

    return finish("alice", t_a, s_a, o_a, g_a), finish("bob", t_b, s_b, o_b, g_b)


def match_coincidences(
    alice: EventStream, bob: EventStream, tau_s: float, offset_s: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Pair up clicks closer than tau_s/2 after removing a known bob offset.

    Greedy nearest-neighbour with single use per event; see qkdsim.kernels.
    Raises ValueError on unsorted streams (contract violation).
    """
    if tau_s <= 0:
        raise ValueError(f"tau_s must be > 0, got {tau_s}")
    for stream in (alice, bob):
        if stream.times.size > 1 and np.any(np.diff(stream.times) < 0):
            raise ValueError(f"{stream.channel} stream is not time-sorted")
    return kernels.match_coincidences(alice.times, bob.times, tau_s, offset_s)


def estimate_metrics(
    matches: tuple[np.ndarray, np.ndarray], alice: EventStream, bob: EventStream
) -> StreamMetrics:
    """Coincidence rate, QBER and visibility from matched pairs.

    Sifts to matched-basis pairs, counts disagreeing outcomes as errors and
    converts QBER to visibility. Statistical errors are Poisson/binomial.
    Reads only times, basis and outcome; origin labels are ignored.
    """
    idx_a, idx_b = matches
    duration = alice.duration_s
    n = int(idx_a.size)
    rate = n / duration
    rate_sigma = math.sqrt(n) / duration
    sifted = alice.basis[idx_a] == bob.basis[idx_b]
    n_sifted = int(sifted.sum())
    if n_sifted == 0:
        raise UndefinedMetricError("no matched-basis pairs; QBER undefined")
    errors = int(
        (alice.outcome[idx_a][sifted] != bob.outcome[idx_b][sifted]).sum()
    )
    qber = errors / n_sifted
    qber_sigma = math.sqrt(max(qber * (1.0 - qber), 1.0 / n_sifted) / n_sifted)
    vis = (1.0 - qber) / (1.0 + qber)
    vis_sigma = 2.0 * qber_sigma / (1.0 + qber) ** 2
    return StreamMetrics(
        n_coincidences=n,
        coincidence_rate_cps=rate,
        coincidence_rate_sigma=rate_sigma,
        n_sifted=n_sifted,
        qber=qber,
        qber_sigma=qber_sigma,
        visibility=vis,
        visibility_sigma=vis_sigma,
    )


def recover_clock_offset(
    alice: EventStream,
    bob: EventStream,
    bin_s: float,
    block_s: float = 0.1,
    max_lag_s: float = 100e-6,
    min_significance: float = 5.0,
) -> list[BlockOffset]:
    """Per-block clock offset between the streams by cross-correlation.

    For each block of duration block_s, histograms all pairwise arrival-time
    differences within +-max_lag_s at resolution bin_s, takes the peak and
    refines it by three-point parabolic interpolation. A block whose peak
    does not stand min_significance sigma above the correlation floor is
    flagged unlocked (offset NaN).
    """
    if bin_s <= 0:
        raise ValueError(f"bin_s must be > 0, got {bin_s}")
    if block_s <= 0:
        raise ValueError(f"block_s must be > 0, got {block_s}")
    n_blocks = max(1, int(math.floor(alice.duration_s / block_s + 1e-9)))
    results: list[BlockOffset] = []
    n_bins = int(round(2.0 * max_lag_s / bin_s))
    for k in range(n_blocks):
        t0 = k * block_s
        t1 = t0 + block_s
        a_lo, a_hi = np.searchsorted(alice.times, (t0, t1))
        b_lo, b_hi = np.searchsorted(bob.times, (t0 - max_lag_s, t1 + max_lag_s))
        counts = kernels.lag_histogram(
            alice.times[a_lo:a_hi], bob.times[b_lo:b_hi], max_lag_s, bin_s
        )
        peak = int(np.argmax(counts))
        exclude = np.zeros(n_bins, dtype=bool)
        exclude[max(0, peak - 2) : peak + 3] = True
        floor_bins = counts[~exclude]
        floor_mean = float(floor_bins.mean()) if floor_bins.size else 0.0
        floor_sigma = max(
            float(floor_bins.std()) if floor_bins.size else 0.0,
            math.sqrt(max(floor_mean, 1.0)),
        )
        significance = (float(counts[peak]) - floor_mean) / floor_sigma
        locked = significance >= min_significance
        if locked and 0 < peak < n_bins - 1:
            c_m, c_0, c_p = float(counts[peak - 1]), float(counts[peak]), float(counts[peak + 1])
            denom = c_m - 2.0 * c_0 + c_p
            delta = 0.0 if denom >= 0.0 else max(-0.5, min(0.5, 0.5 * (c_m - c_p) / denom))
        else:
            delta = 0.0
        offset = -max_lag_s + (peak + 0.5 + delta) * bin_s
        results.append(
            BlockOffset(
                t_center_s=t0 + block_s / 2.0,
                offset_s=offset if locked else math.nan,
                peak_counts=int(counts[peak]),
                significance=significance,
                locked=locked,
            )
        )
    return results
