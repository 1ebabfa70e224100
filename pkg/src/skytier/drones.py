"""Aerial nodes and their ground footprints."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Aabb, Point2
from .survivability import DroneResources


def feet_to_meters(ft: float) -> float:
    return ft * 3048 / 10000


MIN_ALTITUDE = feet_to_meters(200)  # 60.96 m
MAX_ALTITUDE = feet_to_meters(500)  # 152.4 m
INITIAL_UAV_AREA = 1000.0

# aperture chosen so a drone at the minimum altitude serves exactly the initial area
TAN_HALF_APERTURE = (math.sqrt(INITIAL_UAV_AREA) / 2) / MIN_ALTITUDE


def footprint_side(altitude: float, tan_half_aperture: float = TAN_HALF_APERTURE) -> float:
    return 2.0 * altitude * tan_half_aperture


def aperture_for(initial_area: float, altitude: float = MIN_ALTITUDE) -> float:
    """Half-aperture tangent that gives a square footprint of ``initial_area`` at ``altitude``."""
    if initial_area <= 0 or altitude <= 0:
        raise ValueError("area and altitude must be positive")
    return (math.sqrt(initial_area) / 2) / altitude


@dataclass(frozen=True)
class Footprint:
    center: Point2
    side: float
    altitude: float

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError("footprint side must be positive")

    @classmethod
    def at(cls, center, altitude: float, tan_half_aperture: float = TAN_HALF_APERTURE) -> "Footprint":
        return cls(Point2(float(center[0]), float(center[1])), footprint_side(altitude, tan_half_aperture), altitude)

    @property
    def box(self) -> Aabb:
        return Aabb.around(self.center, self.side)

    @property
    def area(self) -> float:
        return self.side * self.side


@dataclass
class Drone:
    """A tiered aerial base station. ``position`` is the ground projection."""

    id: int
    tier: int
    position: tuple
    altitude: float
    resources: DroneResources = field(default_factory=DroneResources)
    initial: DroneResources = None
    aperture: float = TAN_HALF_APERTURE  # tan of the half aperture angle

    def __post_init__(self):
        self.position = (float(self.position[0]), float(self.position[1]))
        if self.initial is None:
            self.initial = self.resources

    @property
    def footprint(self) -> Footprint:
        return Footprint.at(self.position, self.altitude, self.aperture)

    def copy(self) -> "Drone":
        return Drone(self.id, self.tier, self.position, self.altitude, self.resources, self.initial, self.aperture)
