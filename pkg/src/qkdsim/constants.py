"""Physical constants shared across the simulator."""

EARTH_RADIUS_KM = 6378.137
"""Mean equatorial Earth radius (km), spherical Earth model."""

EARTH_MU_KM3_S2 = 398600.4418
"""Geocentric gravitational parameter GM (km^3/s^2)."""

SPEED_OF_LIGHT_M_S = 299792458.0
"""Speed of light in vacuum (m/s)."""
