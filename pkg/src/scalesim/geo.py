"""Geographic proximity math used by cluster formation."""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class GeoPoint:
    """Position on the sphere, degrees. lat in [-90, 90], lon in (-180, 180]."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat_deg}")
        if not -180.0 < self.lon_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon_deg}")


def wrap_longitude_rad(dlam: float) -> float:
    """Normalize a longitude difference in radians to the shorter arc.

    Branching instead of a modulo keeps the wrap exactly antisymmetric in
    floating point, which makes the distance exactly symmetric.
    """
    if dlam > math.pi:
        return dlam - 2.0 * math.pi
    if dlam < -math.pi:
        return dlam + 2.0 * math.pi
    return dlam


def equirectangular_distance(p: GeoPoint, q: GeoPoint) -> float:
    """Flat-projection distance in km between two points.

    distance = R * sqrt(dphi^2 + (cos((phi1 + phi2) / 2) * dlam)^2), with the
    longitude difference wrapped to the shorter arc. Accurate to well under
    0.5% against great-circle distance for legs up to a few hundred km, the
    regime cluster formation operates in.
    """
    phi1 = math.radians(p.lat_deg)
    phi2 = math.radians(q.lat_deg)
    dphi = phi2 - phi1
    dlam = wrap_longitude_rad(math.radians(q.lon_deg - p.lon_deg))
    x = math.cos(0.5 * (phi1 + phi2)) * dlam
    return EARTH_RADIUS_KM * math.sqrt(dphi * dphi + x * x)
