"""Circular-orbit pass geometry between a fixed optical ground station and a
LEO satellite.

Model: spherical, non-rotating Earth. The sub-satellite point travels along a
great circle at the orbital angular rate; the ground station sits at a fixed
lateral (cross-track) offset from that circle, so closest approach happens at
t = 0. This reproduces slew rates, slant ranges and visibility windows of a
near-polar pass without a full ephemeris propagator.

Coordinates: Earth-centred, orbit plane = x-y plane, ground station rotated
out of plane about the x axis by the cross-track angle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import EARTH_MU_KM3_S2, EARTH_RADIUS_KM, SPEED_OF_LIGHT_M_S

SLEW_DIFF_STEP_S = 0.1
"""Central-difference step for slew rates; the rates vary on ~10 s scales."""


@dataclass(frozen=True)
class OrbitSpec:
    """Circular orbit plus the encounter geometry of one ground station.

    altitude_km: orbit height above the mean Earth radius.
    ground_track_offset_km: great-circle distance between the ground station
        and the sub-satellite track at closest approach (0 = direct overpass).
    """

    altitude_km: float
    ground_track_offset_km: float = 0.0

    def __post_init__(self) -> None:
        if self.altitude_km <= 0:
            raise ValueError(f"altitude_km must be > 0, got {self.altitude_km}")
        if self.ground_track_offset_km < 0:
            raise ValueError(
                f"ground_track_offset_km must be >= 0, got {self.ground_track_offset_km}"
            )


@dataclass(frozen=True)
class Kinematics:
    """Orbital speed, period and angular rate of a circular orbit."""

    orbital_speed_km_s: float
    period_s: float
    orbital_angular_rate_rad_s: float


@dataclass(frozen=True)
class PassSample:
    """Geometry of the link at one instant of an encounter.

    t_s is relative to closest approach. elevation_rad is negative while the
    satellite is below the local horizon; zenith_rad + elevation_rad = pi/2
    always holds.
    """

    t_s: float
    slant_range_km: float
    zenith_rad: float
    elevation_rad: float
    central_angle_rad: float

    @property
    def above_horizon(self) -> bool:
        return self.elevation_rad >= 0.0


@dataclass(frozen=True)
class SlewRates:
    """Line-of-sight rotation rates seen by the ground station and satellite."""

    ogs_rate_rad_s: float
    sat_rate_rad_s: float


@dataclass(frozen=True)
class PointAhead:
    """One-way light time and the pointing lead it implies."""

    light_time_s: float
    angle_rad: float


def orbit_kinematics(orbit: OrbitSpec) -> Kinematics:
    """Circular-orbit speed, period and angular rate from vis-viva."""
    r = EARTH_RADIUS_KM + orbit.altitude_km
    speed = math.sqrt(EARTH_MU_KM3_S2 / r)
    period = 2.0 * math.pi * r / speed
    return Kinematics(
        orbital_speed_km_s=speed,
        period_s=period,
        orbital_angular_rate_rad_s=speed / r,
    )


def _geometry(orbit: OrbitSpec, t_s: float) -> tuple[float, float, float]:
    """Central angle gamma, slant range (km) and cos(zenith) at time t."""
    kin = orbit_kinematics(orbit)
    alpha = kin.orbital_angular_rate_rad_s * t_s
    beta = orbit.ground_track_offset_km / EARTH_RADIUS_KM
    cos_gamma = math.cos(alpha) * math.cos(beta)
    gamma = math.acos(max(-1.0, min(1.0, cos_gamma)))
    r = EARTH_RADIUS_KM + orbit.altitude_km
    slant = math.sqrt(
        EARTH_RADIUS_KM**2 + r**2 - 2.0 * EARTH_RADIUS_KM * r * cos_gamma
    )
    cos_zenith = (r * cos_gamma - EARTH_RADIUS_KM) / slant
    return gamma, slant, max(-1.0, min(1.0, cos_zenith))


def pass_sample(orbit: OrbitSpec, t_s: float) -> PassSample:
    """Link geometry at time t_s relative to closest approach.

    A negative elevation is a valid result and flags the satellite below the
    horizon; no error is raised.
    """
    gamma, slant, cos_zenith = _geometry(orbit, t_s)
    zenith = math.acos(cos_zenith)
    return PassSample(
        t_s=t_s,
        slant_range_km=slant,
        zenith_rad=zenith,
        elevation_rad=math.pi / 2.0 - zenith,
        central_angle_rad=gamma,
    )


def pass_profile(
    orbit: OrbitSpec, dt_s: float, min_elevation_rad: float
) -> list[PassSample]:
    """Uniformly sampled encounter, clipped to elevation >= min_elevation_rad.

    Samples lie on the grid t = k*dt_s, symmetric about closest approach.
    Returns an empty list if the pass never reaches the elevation threshold.
    """
    if dt_s <= 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    if pass_sample(orbit, 0.0).elevation_rad < min_elevation_rad:
        return []
    kin = orbit_kinematics(orbit)
    # beyond a quarter revolution the satellite is on the far side of Earth
    k_max = int(math.floor((math.pi / 2.0) / kin.orbital_angular_rate_rad_s / dt_s))
    k_end = 0
    for k in range(1, k_max + 1):
        if pass_sample(orbit, k * dt_s).elevation_rad < min_elevation_rad:
            break
        k_end = k
    return [pass_sample(orbit, k * dt_s) for k in range(-k_end, k_end + 1)]


def _los_unit_ogs(orbit: OrbitSpec, t_s: float) -> tuple[float, float, float]:
    """Unit vector from ground station to satellite, Earth-fixed frame."""
    kin = orbit_kinematics(orbit)
    alpha = kin.orbital_angular_rate_rad_s * t_s
    beta = orbit.ground_track_offset_km / EARTH_RADIUS_KM
    r = EARTH_RADIUS_KM + orbit.altitude_km
    sat = (r * math.cos(alpha), r * math.sin(alpha), 0.0)
    ogs = (
        EARTH_RADIUS_KM * math.cos(beta),
        0.0,
        EARTH_RADIUS_KM * math.sin(beta),
    )
    d = (sat[0] - ogs[0], sat[1] - ogs[1], sat[2] - ogs[2])
    n = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
    return (d[0] / n, d[1] / n, d[2] / n)


def _los_unit_sat_frame(orbit: OrbitSpec, t_s: float) -> tuple[float, float, float]:
    """Unit vector from satellite to ground station, in the frame co-rotating
    with the orbit (the satellite body frame for a nadir-locked platform)."""
    kin = orbit_kinematics(orbit)
    alpha = kin.orbital_angular_rate_rad_s * t_s
    u = _los_unit_ogs(orbit, t_s)
    v = (-u[0], -u[1], -u[2])
    # rotate by -alpha about the orbit normal (z)
    c, s = math.cos(-alpha), math.sin(-alpha)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1], v[2])


def _angle_between(a: tuple[float, float, float], b: tuple[float, float, float]) -> float:
    cx = a[1] * b[2] - a[2] * b[1]
    cy = a[2] * b[0] - a[0] * b[2]
    cz = a[0] * b[1] - a[1] * b[0]
    cross = math.sqrt(cx**2 + cy**2 + cz**2)
    dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    return math.atan2(cross, dot)


def slew_rates(orbit: OrbitSpec, t_s: float) -> SlewRates:
    """Angular rates of the line of sight at time t_s.

    ogs_rate is the rotation rate of the ground-station-to-satellite direction
    in the Earth-fixed frame. sat_rate is the rotation rate of the reverse
    direction in the orbit co-rotating frame, i.e. the body slew a
    nadir-locked satellite must add to keep staring at the station.
    Both use a central difference with step SLEW_DIFF_STEP_S.
    """
    if pass_sample(orbit, t_s).elevation_rad < 0:
        raise ValueError(f"satellite below horizon at t={t_s} s")
    dt = SLEW_DIFF_STEP_S
    ogs = _angle_between(
        _los_unit_ogs(orbit, t_s - dt), _los_unit_ogs(orbit, t_s + dt)
    ) / (2.0 * dt)
    sat = _angle_between(
        _los_unit_sat_frame(orbit, t_s - dt), _los_unit_sat_frame(orbit, t_s + dt)
    ) / (2.0 * dt)
    return SlewRates(ogs_rate_rad_s=ogs, sat_rate_rad_s=sat)


def point_ahead(orbit: OrbitSpec, t_s: float) -> PointAhead:
    """Light travel time to the satellite and the pointing lead angle.

    The lead is the ground-station line-of-sight rate times the one-way light
    time: where the satellite will be when the photons arrive.
    """
    sample = pass_sample(orbit, t_s)
    if sample.elevation_rad < 0:
        raise ValueError(f"satellite below horizon at t={t_s} s")
    light_time = sample.slant_range_km * 1e3 / SPEED_OF_LIGHT_M_S
    rates = slew_rates(orbit, t_s)
    return PointAhead(
        light_time_s=light_time, angle_rad=rates.ogs_rate_rad_s * light_time
    )


def footprint_diameter(fov_rad: float, slant_range_km: float) -> float:
    """Beam footprint diameter (m) of a full-angle FOV at a slant range,
    small-angle approximation."""
    if fov_rad < 0:
        raise ValueError(f"fov_rad must be >= 0, got {fov_rad}")
    return fov_rad * slant_range_km * 1e3
