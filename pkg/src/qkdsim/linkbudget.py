"""Free-space uplink attenuation and background-light model.

The average link attenuation combines beam spreading from diffraction and
atmospheric turbulence, telescope transmissions, pointing loss and
atmospheric absorption:

    A_linear = L^2 (theta_T^2 + theta_atm^2) / D_R^2
               * 1 / (T_T (1 - L_P) T_R) * 10^(A_atm / 10)

with theta_T = 2.44 lambda / D_T (full Airy-disk diameter) and
theta_atm = 2.1 lambda / r0 (Fried parameter r0). Both divergences are full
cone angles and add quadratically; the beam is launched from the ground, so
turbulence acts at the transmitter. Attenuation is reported as a positive dB
loss; linear transmittance is 10^(-A/10).

All functions are pure and safe to call concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

DIFFRACTION_FACTOR = 2.44
TURBULENCE_FACTOR = 2.1
FRIED_WAVELENGTH_EXPONENT = 6.0 / 5.0
FRIED_ZENITH_EXPONENT = 3.0 / 5.0


@dataclass(frozen=True)
class LinkParams:
    """Uplink hardware and atmosphere-at-zenith parameters."""

    wavelength_m: float = 808e-9
    a_atm0_db: float = 3.0
    d_r_m: float = 0.15
    d_t_m: float = 1.0
    t_r: float = 0.8
    t_t: float = 0.8
    l_p: float = 0.2
    altitude_km: float = 550.0

    def __post_init__(self) -> None:
        for name in ("wavelength_m", "d_r_m", "d_t_m", "altitude_km"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("t_r", "t_t"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {getattr(self, name)}")
        if not 0.0 <= self.l_p < 1.0:
            raise ValueError(f"l_p must be in [0, 1), got {self.l_p}")
        if self.a_atm0_db < 0:
            raise ValueError(f"a_atm0_db must be >= 0, got {self.a_atm0_db}")


@dataclass(frozen=True)
class Atmosphere:
    """Turbulence strength: Fried parameter at zenith and its reference
    wavelength."""

    fried_r0_m: float = 0.20
    reference_wavelength_m: float = 808e-9

    def __post_init__(self) -> None:
        if self.fried_r0_m <= 0:
            raise ValueError(f"fried_r0_m must be > 0, got {self.fried_r0_m}")
        if self.reference_wavelength_m <= 0:
            raise ValueError(
                f"reference_wavelength_m must be > 0, got {self.reference_wavelength_m}"
            )


@dataclass(frozen=True)
class BackgroundModel:
    """Sky radiance seen by the receiver within its detection bandpass."""

    spectral_radiance_photons: float = 2.5e11
    fov_rad: float = 215e-6
    pde: float = 0.4

    def __post_init__(self) -> None:
        if self.spectral_radiance_photons < 0:
            raise ValueError("spectral_radiance_photons must be >= 0")
        if self.fov_rad < 0:
            raise ValueError("fov_rad must be >= 0")
        if not 0.0 <= self.pde <= 1.0:
            raise ValueError(f"pde must be in [0, 1], got {self.pde}")


def diffraction_divergence(params: LinkParams) -> float:
    """Full-cone diffraction divergence of the transmitter (rad).

    slant_range * divergence is the full diameter of the central Airy spot.
    """
    return DIFFRACTION_FACTOR * params.wavelength_m / params.d_t_m


def turbulence_divergence(wavelength_m: float, fried_r0_m: float) -> float:
    """Full-cone turbulence-induced divergence (rad) for a given Fried
    parameter at the same wavelength."""
    if fried_r0_m <= 0:
        raise ValueError(f"fried_r0_m must be > 0, got {fried_r0_m}")
    return TURBULENCE_FACTOR * wavelength_m / fried_r0_m


def fried_scale_wavelength(
    r0_at_ref_m: float, wavelength_ref_m: float, wavelength_target_m: float
) -> float:
    """Scale a Fried parameter to another wavelength, r0 ~ lambda^(6/5)."""
    if min(r0_at_ref_m, wavelength_ref_m, wavelength_target_m) <= 0:
        raise ValueError("all arguments must be > 0")
    return r0_at_ref_m * (wavelength_target_m / wavelength_ref_m) ** FRIED_WAVELENGTH_EXPONENT


def fried_scale_zenith(r0_zenith_m: float, zenith_rad: float) -> float:
    """Reduce the zenith Fried parameter for a slanted path,
    r0' = r0 cos(zenith)^(3/5)."""
    if r0_zenith_m <= 0:
        raise ValueError(f"r0_zenith_m must be > 0, got {r0_zenith_m}")
    if not 0.0 <= zenith_rad < math.pi / 2.0:
        raise ValueError(f"zenith_rad must be in [0, pi/2), got {zenith_rad}")
    return r0_zenith_m * math.cos(zenith_rad) ** FRIED_ZENITH_EXPONENT


def atmospheric_attenuation_db(a_atm0_db: float, zenith_rad: float) -> float:
    """Absorption/scattering loss (dB) along a slant path: zenith value over
    cos(zenith) (flat-layer airmass)."""
    if not 0.0 <= zenith_rad < math.pi / 2.0:
        raise ValueError(f"zenith_rad must be in [0, pi/2), got {zenith_rad}")
    return a_atm0_db / math.cos(zenith_rad)


def link_attenuation_db(
    params: LinkParams,
    atmosphere: Atmosphere,
    slant_range_km: float,
    zenith_rad: float,
    zenith_r0_scaling: bool = True,
) -> float:
    """Average uplink attenuation (positive dB loss) at one pass geometry.

    The Fried parameter is first scaled to the link wavelength and, when
    zenith_r0_scaling is set, degraded for the slant path through the
    turbulent layer. Whether measured seeing statistics already fold in the
    slant-path degradation is ambiguous in practice, so the scaling is
    switchable; it is applied by default.
    """
    if slant_range_km <= 0:
        raise ValueError(f"slant_range_km must be > 0, got {slant_range_km}")
    r0 = fried_scale_wavelength(
        atmosphere.fried_r0_m, atmosphere.reference_wavelength_m, params.wavelength_m
    )
    if zenith_r0_scaling:
        r0 = fried_scale_zenith(r0, zenith_rad)
    theta_t = diffraction_divergence(params)
    theta_atm = turbulence_divergence(params.wavelength_m, r0)
    slant_m = slant_range_km * 1e3
    a_linear = (
        slant_m**2
        * (theta_t**2 + theta_atm**2)
        / params.d_r_m**2
        / (params.t_t * (1.0 - params.l_p) * params.t_r)
        * 10.0 ** (atmospheric_attenuation_db(params.a_atm0_db, zenith_rad) / 10.0)
    )
    return 10.0 * math.log10(a_linear)


def background_count_rate(
    model: BackgroundModel, params: LinkParams, zenith_rad: float = 0.0
) -> float:
    """Detected background rate (counts/s) from sky radiance.

    Radiometric product of receiver area, field-of-view solid angle, receiver
    transmission, atmospheric transmittance and detector efficiency. Radiance
    is per steradian, so the result does not depend on the slant range.
    """
    area = math.pi * params.d_r_m**2 / 4.0
    solid_angle = math.pi * (model.fov_rad / 2.0) ** 2
    transmittance = 10.0 ** (
        -atmospheric_attenuation_db(params.a_atm0_db, zenith_rad) / 10.0
    )
    return (
        model.spectral_radiance_photons
        * area
        * solid_angle
        * params.t_r
        * transmittance
        * model.pde
    )
