"""Link-budget primitives: slant range, free-space path loss, attenuation.

FSPL uses the familiar km/MHz form, 20·log10(d) + 20·log10(f) + 32.45 dB.
Atmospheric loss is a cosecant airmass scaling of a per-band zenith value,
clamped at low elevation. It is a declared stand-in with the right frequency
and elevation trends, not a full gaseous/rain model; see the README.

All functions broadcast over numpy arrays, so a whole grid of evaluation
points can be processed per transmitter in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenarios import BANDS, Transmitter

# Links shorter than 1 m are clamped to avoid the log singularity in the
# grid cell containing a base station.
MIN_LINK_DISTANCE_KM = 1e-3

# Cosecant scaling is capped at this multiple of the zenith value.
LOW_ELEVATION_CLAMP = 10.0


@dataclass(frozen=True)
class LinkGeometry:
    """Geometry of one transmitter-to-point link."""

    ground_distance_km: float
    altitude_km: float
    slant_range_km: float
    elevation_deg: float


def link_geometry(ground_distance_km: float, altitude_km: float) -> LinkGeometry:
    """Slant range and elevation for a ground offset / altitude pair."""
    return LinkGeometry(
        ground_distance_km=ground_distance_km,
        altitude_km=altitude_km,
        slant_range_km=float(slant_range(ground_distance_km, altitude_km)),
        elevation_deg=float(elevation_angle(ground_distance_km, altitude_km)),
    )


def slant_range(ground_distance_km, altitude_km):
    """Straight-line distance √(d_g² + h²) in km."""
    dg = np.asarray(ground_distance_km, dtype=float)
    h = np.asarray(altitude_km, dtype=float)
    if np.any(dg < 0) or np.any(h < 0):
        raise ValueError("distances must be >= 0")
    if np.any((dg == 0) & (h == 0)):
        raise ValueError("degenerate link: ground distance and altitude both zero")
    return np.hypot(dg, h)[()]


def free_space_path_loss(distance_km, frequency_mhz):
    """FSPL in dB for distance in km and carrier frequency in MHz."""
    d = np.asarray(distance_km, dtype=float)
    f = np.asarray(frequency_mhz, dtype=float)
    if np.any(d <= 0) or np.any(f <= 0):
        raise ValueError("distance and frequency must be > 0")
    return (20.0 * np.log10(d) + 20.0 * np.log10(f) + 32.45)[()]


def elevation_angle(ground_distance_km, altitude_km):
    """Elevation in degrees: 90 at nadir, 0 for purely horizontal links."""
    dg = np.asarray(ground_distance_km, dtype=float)
    h = np.asarray(altitude_km, dtype=float)
    if np.any(h < 0):
        raise ValueError("altitude must be >= 0")
    return np.degrees(np.arctan2(h, dg))[()]


def atmospheric_attenuation(band: str, elevation_deg, zenith_table=None):
    """Slant-path atmospheric loss in dB for a satellite link.

    zenith / sin(elevation), clamped to LOW_ELEVATION_CLAMP × zenith.
    Terrestrial links do not take an atmospheric term; callers skip this
    function for base stations.
    """
    el = np.asarray(elevation_deg, dtype=float)
    if np.any(el <= 0) or np.any(el > 90):
        raise ValueError("satellite elevation must be in (0, 90] degrees")
    zenith = (zenith_table or {b: s.zenith_attenuation_db for b, s in BANDS.items()})[band]
    return np.minimum(zenith / np.sin(np.radians(el)), LOW_ELEVATION_CLAMP * zenith)[()]


def received_power(
    transmitter: Transmitter,
    point,
    *,
    zenith_table=None,
    min_distance_km: float = MIN_LINK_DISTANCE_KM,
):
    """Received power in dBm at ``point`` = (x, y) km, broadcasting over arrays.

    P_r = P_t − FSPL(d, f) − L_atm, with d the slant range for satellites
    and the horizontal distance for base stations (which take no
    atmospheric term).
    """
    x, y = point
    dg = np.hypot(
        np.asarray(x, dtype=float) - transmitter.position_km[0],
        np.asarray(y, dtype=float) - transmitter.position_km[1],
    )
    freq = BANDS[transmitter.band].frequency_mhz
    if transmitter.kind == "satellite":
        h = transmitter.altitude_km
        distance = np.hypot(dg, h)
        # sin(elevation) = h / slant, so the cosecant scaling is slant / h.
        zenith = (zenith_table or {b: s.zenith_attenuation_db for b, s in BANDS.items()})[
            transmitter.band
        ]
        atm = np.minimum(zenith * distance / h, LOW_ELEVATION_CLAMP * zenith)
    else:
        distance = dg
        atm = 0.0
    distance = np.maximum(distance, min_distance_km)
    loss = 20.0 * np.log10(distance) + 20.0 * np.log10(freq) + 32.45
    return (transmitter.tx_power_dbm - loss - atm)[()]
