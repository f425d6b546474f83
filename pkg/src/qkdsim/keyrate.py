"""Entangled-pair QKD rate model.

Follows the parametric-down-conversion source model of Ma, Fung & Lo,
Phys. Rev. A 76, 012307 (2007): coincidence probability per coincidence
window, error rate of the sifted key and the distillable secret fraction
after error correction and privacy amplification. The source emits mu pairs
per window on average, so the pair production rate is mu / tau.

The joint no-click term of the coincidence probability is

    (1 - Y0A)(1 - Y0B) / (1 + eta_A mu/2 + eta_B mu/2 + s * eta_A eta_B mu/2)^2

with s = cross_term_sign. s = -1 is the published model and the default;
s = +1 is a variant kept for cross-checks against other implementations. The
+1 variant is unphysical at low loss (the probability goes negative once the
signal dominates the noise), which the tests document.

All functions are pure; sweeps can run concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Callable

from .linkbudget import link_attenuation_db
from .orbit import pass_profile

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import ScenarioConfig

MFL_CROSS_TERM_SIGN = -1
"""Cross-term sign of the published model (Ma, Fung & Lo)."""

BELL_VISIBILITY_THRESHOLD = 1.0 / math.sqrt(2.0)
"""Minimum polarization visibility for a Bell-inequality violation."""


@dataclass(frozen=True)
class SourceDetectorParams:
    """Source, detector and post-processing parameters of the QKD link.

    mu is the mean pair number per coincidence window tau, so the pair rate
    is mu / tau. eta_a is the full ground-side detection efficiency; the
    satellite side efficiency is pde * 10^(-A/10) and is passed separately
    wherever the link attenuation A enters.
    """

    mu: float = 0.1
    tau_s: float = 1e-9
    q_sift: float = 0.5
    f_ec: float = 1.22
    d_a_cps: float = 100.0
    d_b_cps: float = 100.0
    b_cps: float = 400.0
    n_det: int = 4
    pde: float = 0.4
    eta_a: float = 0.6
    e0: float = 0.5
    e_d: float = 0.01

    def __post_init__(self) -> None:
        if not 0.0 <= self.mu < 1.0:
            raise ValueError(f"mu must be in [0, 1), got {self.mu}")
        if self.tau_s <= 0:
            raise ValueError(f"tau_s must be > 0, got {self.tau_s}")
        if not 0.0 < self.q_sift <= 1.0:
            raise ValueError(f"q_sift must be in (0, 1], got {self.q_sift}")
        if self.f_ec < 1.0:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec}")
        for name in ("d_a_cps", "d_b_cps", "b_cps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.n_det < 1:
            raise ValueError(f"n_det must be >= 1, got {self.n_det}")
        for name in ("pde", "eta_a"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {getattr(self, name)}")
        if not 0.0 <= self.e_d < 0.5:
            raise ValueError(f"e_d must be in [0, 0.5), got {self.e_d}")
        if not 0.0 <= self.e0 <= 0.5:
            raise ValueError(f"e0 must be in [0, 0.5], got {self.e0}")

    @property
    def pair_rate_cps(self) -> float:
        return self.mu / self.tau_s


@dataclass(frozen=True)
class KeyRateMetrics:
    """All rate-model outputs at one operating point."""

    y0a: float
    y0b: float
    q_coinc: float
    r_coinc_cps: float
    qber: float
    visibility: float
    snr: float
    r_dist: float
    r_secure_cps: float


@dataclass(frozen=True)
class FriedHistogram:
    """Yearly seeing statistics: (Fried parameter, days per year) bins."""

    bins: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        last = 0.0
        for r0, days in self.bins:
            if r0 <= last:
                raise ValueError("r0 bins must be positive and strictly increasing")
            if days < 0:
                raise ValueError(f"days must be >= 0, got {days}")
            last = r0

    @property
    def total_days(self) -> float:
        return sum(days for _, days in self.bins)


def eta_b_from_attenuation(pde: float, attenuation_db: float) -> float:
    """Satellite-side detection efficiency behind a lossy link."""
    return pde * 10.0 ** (-attenuation_db / 10.0)


def noise_probabilities(p: SourceDetectorParams) -> tuple[float, float]:
    """Probability of a noise count within one coincidence window, per side.

    Ground side sees its detectors' dark counts only; the satellite side adds
    the background rate on top of its dark counts.
    """
    y0a = p.n_det * p.d_a_cps * p.tau_s
    y0b = (p.n_det * p.d_b_cps + p.b_cps) * p.tau_s
    return y0a, y0b


def coincidence_probability(
    p: SourceDetectorParams, eta_b: float, cross_term_sign: int = MFL_CROSS_TERM_SIGN
) -> float:
    """Probability of a coincidence (both sides click) per window.

    Counts every coincidence: true pairs, noise-noise and signal-noise
    accidentals. See the module docstring for cross_term_sign.
    """
    if not 0.0 <= eta_b <= 1.0:
        raise ValueError(f"eta_b must be in [0, 1], got {eta_b}")
    if cross_term_sign not in (-1, 1):
        raise ValueError(f"cross_term_sign must be -1 or +1, got {cross_term_sign}")
    y0a, y0b = noise_probabilities(p)
    a = p.eta_a * p.mu / 2.0
    b = eta_b * p.mu / 2.0
    d = p.eta_a * eta_b * p.mu / 2.0
    return (
        1.0
        - (1.0 - y0a) / (1.0 + a) ** 2
        - (1.0 - y0b) / (1.0 + b) ** 2
        + (1.0 - y0a) * (1.0 - y0b) / (1.0 + a + b + cross_term_sign * d) ** 2
    )


def coincidence_rate(p: SourceDetectorParams, q_coinc: float) -> float:
    """Coincidences per second: window probability times the window rate 1/tau."""
    return q_coinc / p.tau_s


def accidental_rate(
    pair_rate_cps: float, eta_a: float, receiver_singles_cps: float, tau_s: float
) -> float:
    """Accidental-coincidence rate from uncorrelated singles.

    Product estimate N_acc = N_t * N_r * tau with N_t the transmitter-side
    detection rate and N_r the total receiver-side singles rate (attenuated
    signal plus noise).
    """
    return (eta_a * pair_rate_cps) * receiver_singles_cps * tau_s


def qber(
    p: SourceDetectorParams, eta_b: float, cross_term_sign: int = MFL_CROSS_TERM_SIGN
) -> float:
    """Quantum bit error rate of the sifted key.

    Noise coincidences are wrong half the time (e0); true pairs err with the
    polarization error e_d. Tends to e0 as the signal vanishes and to e_d in
    the noiseless small-mu limit.
    """
    q = coincidence_probability(p, eta_b, cross_term_sign)
    numerator = (p.e0 - p.e_d) * p.eta_a * eta_b * p.mu * (1.0 + p.mu / 2.0)
    denominator = (
        (1.0 + p.eta_a * p.mu / 2.0)
        * (1.0 + eta_b * p.mu / 2.0)
        * (1.0 + p.eta_a * p.mu / 2.0 + eta_b * p.mu / 2.0 - p.eta_a * eta_b * p.mu / 2.0)
    )
    if numerator == 0.0:
        return p.e0
    return p.e0 - numerator / (q * denominator)


def visibility(qber_value: float) -> float:
    """Polarization-correlation visibility implied by a QBER."""
    return (1.0 - qber_value) / (1.0 + qber_value)


def snr(qber_value: float) -> float:
    """Signal-to-noise ratio of the correlation curve, (1/QBER) - 1."""
    if qber_value <= 0:
        return math.inf
    return 1.0 / qber_value - 1.0


def binary_entropy(x: float) -> float:
    """Binary entropy H2(x) in bits; 0 at the endpoints by continuity."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def distillation_fraction(qber_value: float, q_sift: float, f_ec: float) -> float:
    """Secret bits per coincidence after sifting, error correction and
    privacy amplification; floored at zero."""
    h = binary_entropy(qber_value)
    return max(0.0, q_sift * (1.0 - f_ec * h - h))


def key_rate_metrics(
    p: SourceDetectorParams,
    attenuation_db: float,
    cross_term_sign: int = MFL_CROSS_TERM_SIGN,
) -> KeyRateMetrics:
    """Evaluate the full rate model at one link attenuation."""
    y0a, y0b = noise_probabilities(p)
    eta_b = eta_b_from_attenuation(p.pde, attenuation_db)
    q = coincidence_probability(p, eta_b, cross_term_sign)
    e = qber(p, eta_b, cross_term_sign)
    r_coinc = coincidence_rate(p, q)
    r_dist = distillation_fraction(e, p.q_sift, p.f_ec) if 0.0 <= e <= 0.5 else 0.0
    return KeyRateMetrics(
        y0a=y0a,
        y0b=y0b,
        q_coinc=q,
        r_coinc_cps=r_coinc,
        qber=e,
        visibility=visibility(e),
        snr=snr(e),
        r_dist=r_dist,
        r_secure_cps=r_coinc * r_dist,
    )


def secure_key_rate(
    p: SourceDetectorParams,
    attenuation_db: float,
    cross_term_sign: int = MFL_CROSS_TERM_SIGN,
) -> float:
    """Secret key bits per second at one link attenuation; zero beyond the
    QBER cutoff of the distillation bound."""
    return key_rate_metrics(p, attenuation_db, cross_term_sign).r_secure_cps


def bell_test_time(
    p: SourceDetectorParams,
    attenuation_db: float,
    n_required: int = 1000,
    cross_term_sign: int = MFL_CROSS_TERM_SIGN,
) -> float:
    """Seconds of integration needed to collect enough coincidences for a
    statistically significant Bell test."""
    rate = key_rate_metrics(p, attenuation_db, cross_term_sign).r_coinc_cps
    if rate <= 0:
        return math.inf
    return n_required / rate


def key_per_pass(scenario: "ScenarioConfig") -> float:
    """Secret key accumulated over one encounter (bits).

    Trapezoidal integration of the secure rate on a 1 s grid, restricted to
    elevation above the scenario's tracking threshold, attenuation below its
    loss cutoff and a usable window capped around closest approach.
    """
    samples = pass_profile(
        scenario.orbit, 1.0, scenario.integration.min_elevation_rad
    )
    if not samples:
        return 0.0
    half_cap = scenario.integration.max_window_s / 2.0
    times = []
    rates = []
    for s in samples:
        times.append(s.t_s)
        if abs(s.t_s) > half_cap:
            rates.append(0.0)
            continue
        a_db = link_attenuation_db(
            scenario.link,
            scenario.atmosphere,
            s.slant_range_km,
            s.zenith_rad,
            zenith_r0_scaling=scenario.model.zenith_r0_scaling,
        )
        if a_db > scenario.integration.loss_cutoff_db:
            rates.append(0.0)
            continue
        rates.append(
            secure_key_rate(scenario.source, a_db, scenario.model.cross_term_sign)
        )
    total = 0.0
    for i in range(len(times) - 1):
        total += 0.5 * (rates[i] + rates[i + 1]) * (times[i + 1] - times[i])
    return total


def annual_yield(
    hist: FriedHistogram,
    passes_per_year: float,
    scenario: "ScenarioConfig | None" = None,
    key_bits_fn: Callable[[float], float] | None = None,
) -> float:
    """Secret bits per year, weighting per-pass yield by seeing statistics.

    Passes are distributed over the histogram bins in proportion to days per
    year; each bin contributes its share of passes times the key of one pass
    at that bin's Fried parameter. key_bits_fn overrides the per-pass model
    (r0_m -> bits); by default it re-runs key_per_pass on the scenario with
    the bin's r0.
    """
    if key_bits_fn is None:
        if scenario is None:
            raise ValueError("either scenario or key_bits_fn is required")

        def key_bits_fn(r0_m: float) -> float:
            assert scenario is not None
            varied = replace(
                scenario, atmosphere=replace(scenario.atmosphere, fried_r0_m=r0_m)
            )
            return key_per_pass(varied)

    total_days = hist.total_days
    if total_days == 0.0 or not hist.bins:
        return 0.0
    return sum(
        key_bits_fn(r0) * passes_per_year * (days / total_days)
        for r0, days in hist.bins
    )
