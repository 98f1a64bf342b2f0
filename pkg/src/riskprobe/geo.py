"""Coordinate frame alignment between geodetic, ego-body, and world frames.

The world frame is a flat-earth Cartesian frame with the x-axis facing east
and the y-axis facing north. Geodetic positions are mapped into it with an
equirectangular projection around a reference latitude; body-frame offsets
(forward/left of the ego) are rotated into it with the ego heading.

All angles are radians. Heading is measured counter-clockwise from east
(standard right-handed orientation); GNSS-style compass headings must be
converted by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MEAN_EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    """Geodetic position, radians."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError("geodetic coordinates must be finite")
        if abs(self.lat) > math.pi / 2 + 1e-12:
            raise ValueError(f"latitude {self.lat} outside [-pi/2, pi/2]")
        if abs(self.lon) > math.pi + 1e-12:
            raise ValueError(f"longitude {self.lon} outside [-pi, pi]")


@dataclass(frozen=True)
class WorldPoint:
    """Flat-earth Cartesian position: x meters east, y meters north."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("world coordinates must be finite")

    def distance_to(self, other: "WorldPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class BodyPoint:
    """Ego-relative offset: x_rel meters forward, y_rel meters left."""

    x_rel: float
    y_rel: float

    def __post_init__(self):
        if not (math.isfinite(self.x_rel) and math.isfinite(self.y_rel)):
            raise ValueError("body coordinates must be finite")


@dataclass(frozen=True)
class ProjectionConfig:
    """Equirectangular projection parameters.

    r_e is the earth radius in meters, lat0 the reference latitude (radians)
    near the map center. The default radius is the mean spherical earth.
    """

    r_e: float = MEAN_EARTH_RADIUS_M
    lat0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.r_e) and self.r_e > 0):
            raise ValueError("earth radius must be positive and finite")
        if not math.isfinite(self.lat0):
            raise ValueError("reference latitude must be finite")


def geodetic_to_world(p: GeoPoint, cfg: ProjectionConfig) -> WorldPoint:
    """Project a geodetic position onto the flat-earth world frame.

    x = r_e * cos(lat0) * lon, y = r_e * lat. Linear in (lat, lon), so
    doubling both doubles both outputs.
    """
    return WorldPoint(
        x=cfg.r_e * math.cos(cfg.lat0) * p.lon,
        y=cfg.r_e * p.lat,
    )


def body_to_world(p: BodyPoint, theta: float, origin: WorldPoint) -> WorldPoint:
    """Rotate a body-frame offset by the ego heading and translate to origin.

    theta is the angle between body and world frame, counter-clockwise
    positive. The rotation is orthogonal: the offset norm is preserved.
    """
    if not math.isfinite(theta):
        raise ValueError("heading must be finite")
    c, s = math.cos(theta), math.sin(theta)
    return WorldPoint(
        x=origin.x + c * p.x_rel - s * p.y_rel,
        y=origin.y + s * p.x_rel + c * p.y_rel,
    )


def world_to_body(p: WorldPoint, theta: float, origin: WorldPoint) -> BodyPoint:
    """Inverse of body_to_world: express a world point in the ego body frame."""
    if not math.isfinite(theta):
        raise ValueError("heading must be finite")
    c, s = math.cos(theta), math.sin(theta)
    dx, dy = p.x - origin.x, p.y - origin.y
    return BodyPoint(x_rel=c * dx + s * dy, y_rel=-s * dx + c * dy)
