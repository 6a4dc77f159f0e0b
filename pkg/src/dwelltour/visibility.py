"""Visibility regions and dwell-loop geometry.

A visibility region is the annulus (or annular sector for ANGLE targets) of
ground positions from which the camera sees the target within its tilt and
azimuth tolerances.  Dwell loops are the circles a UAV flies inside that
region: target-centered orbits for FULL targets, minimum-radius circles
about a pivot point otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .dubins import Configuration, angle_distance
from .mission import AngularInterval, Behavior, TargetSpec

# radial slack in meters for containment tests; grid samples sit exactly on
# region boundaries and must not be rejected by rounding
RADIAL_TOL = 1e-6
TANGENT_TOL = 1e-9


@dataclass(frozen=True)
class VisibilityRegion:
    center: tuple[float, float]
    r_min: float
    r_max: float
    angular: AngularInterval = AngularInterval.full()

    def __post_init__(self):
        if not 0.0 <= self.r_min <= self.r_max:
            raise ValueError(f"need 0 <= r_min <= r_max, got {self.r_min}, {self.r_max}")

    def polar(self, p) -> tuple[float, float]:
        dx, dy = p[0] - self.center[0], p[1] - self.center[1]
        return math.hypot(dx, dy), math.atan2(dy, dx)

    def point_at(self, radius: float, bearing: float) -> tuple[float, float]:
        return (
            self.center[0] + radius * math.cos(bearing),
            self.center[1] + radius * math.sin(bearing),
        )

    def contains(self, p, tol: float = RADIAL_TOL) -> bool:
        d, bearing = self.polar(p)
        if not self.r_min - tol <= d <= self.r_max + tol:
            return False
        if self.angular.is_full or d <= tol:
            return True
        return self.angular.contains(bearing, tol=tol / max(d, 1.0))


class LoopKind(str, Enum):
    NONE = "NONE"
    ORBIT_TARGET = "ORBIT_TARGET"
    ORBIT_PIVOT = "ORBIT_PIVOT"


class Direction(str, Enum):
    CCW = "CCW"
    CW = "CW"


@dataclass(frozen=True)
class DwellLoop:
    kind: LoopKind
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    direction: Direction = Direction.CCW
    loops: int = 0

    @property
    def length(self) -> float:
        if self.kind is LoopKind.NONE:
            return 0.0
        return self.loops * 2.0 * math.pi * self.radius

    def config_at(self, start: Configuration, s: float) -> Configuration:
        """Configuration after flying arc length ``s`` around the loop from ``start``."""
        if self.kind is LoopKind.NONE:
            return start
        phi0 = math.atan2(start.y - self.center[1], start.x - self.center[0])
        sign = 1.0 if self.direction is Direction.CCW else -1.0
        phi = phi0 + sign * s / self.radius
        return Configuration(
            self.center[0] + self.radius * math.cos(phi),
            self.center[1] + self.radius * math.sin(phi),
            phi + sign * math.pi / 2,
        )

    def sample(self, start: Configuration, step: float) -> list[Configuration]:
        total = self.length
        if total <= 0.0:
            return [start]
        n = max(4 * max(self.loops, 1), math.ceil(total / step - 1e-9))
        pts = [self.config_at(start, total * i / n) for i in range(n)]
        pts.append(start)
        return pts


NO_LOOP = DwellLoop(LoopKind.NONE)


def build_visibility_region(t: TargetSpec, altitude: float) -> VisibilityRegion:
    lo, hi = t.tilt_interval
    r_min = 0.0 if hi >= math.pi / 2 else altitude / math.tan(hi)
    r_max = altitude / math.tan(lo)
    angular = t.azimuth_interval if t.behavior is Behavior.ANGLE else AngularInterval.full()
    return VisibilityRegion(tuple(t.location), r_min, r_max, angular)


def circle_in_region(center, radius: float, region: VisibilityRegion, tol: float = RADIAL_TOL) -> bool:
    """Whether the whole circle curve of ``radius`` about ``center`` lies in ``region``."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    d, bearing = region.polar(center)
    if abs(d - radius) < region.r_min - tol or d + radius > region.r_max + tol:
        return False
    if region.angular.is_full:
        return True
    if radius >= d:
        return False
    return region.angular.contains_interval(bearing, math.asin(radius / d), tol=tol / d)


def dwell_feasible(t: TargetSpec, region: VisibilityRegion, turn_radius: float) -> bool:
    """Whether target ``t`` admits at least one valid dwell maneuver."""
    r = turn_radius
    tol = RADIAL_TOL
    if t.loops == 0:
        return region.r_max >= region.r_min
    if t.behavior is Behavior.FULL:
        return region.r_max + tol >= max(r, region.r_min)
    # circles that do not enclose the target
    d_lo, d_hi = region.r_min + r, region.r_max - r
    if d_hi + tol >= d_lo:
        if region.angular.is_full:
            return True
        if d_hi > r and 2.0 * math.asin(r / d_hi) <= region.angular.extent + 1e-12:
            return True
    if not region.angular.is_full:
        return False
    # circles around the target; the pivot itself must stay in the region
    return r - region.r_min + tol >= region.r_min and r + region.r_min <= region.r_max + tol


def _pivot(v: Configuration, r: float, direction: Direction) -> tuple[float, float]:
    s, c = math.sin(v.heading), math.cos(v.heading)
    if direction is Direction.CCW:
        return (v.x - r * s, v.y + r * c)
    return (v.x + r * s, v.y - r * c)


def config_in_dwl(v: Configuration, t: TargetSpec, region: VisibilityRegion, turn_radius: float) -> DwellLoop | None:
    """The dwell loop that starts and ends at ``v``, or None when ``v`` is not in DWL."""
    if t.loops == 0:
        return NO_LOOP if region.contains(v.position) else None

    if t.behavior is Behavior.FULL:
        rho, bearing = region.polar(v.position)
        if not max(turn_radius, region.r_min) - RADIAL_TOL <= rho <= region.r_max + RADIAL_TOL:
            return None
        for direction, offset in ((Direction.CCW, math.pi / 2), (Direction.CW, -math.pi / 2)):
            if angle_distance(v.heading, bearing + offset) <= TANGENT_TOL:
                return DwellLoop(LoopKind.ORBIT_TARGET, tuple(region.center), rho, direction, t.loops)
        return None

    for direction in (Direction.CCW, Direction.CW):
        p = _pivot(v, turn_radius, direction)
        if region.contains(p) and circle_in_region(p, turn_radius, region):
            return DwellLoop(LoopKind.ORBIT_PIVOT, p, turn_radius, direction, t.loops)
    return None


def dwell_time(loop: DwellLoop, speed: float) -> float:
    if not speed > 0:
        raise ValueError("speed must be positive")
    return loop.length / speed
