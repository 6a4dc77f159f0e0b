"""Grid sampling of dwell-loop start configurations.

Targets without dwell loops get a polar grid of locations inside the
visibility region times a grid of headings.  FULL orbits are gridded by orbit
radius and bearing, with both tangent headings.  Pivot loops are gridded by
pivot location, loop phase and turn direction.  Node counts are an output of
the spacings, not an input.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass

from .dubins import TWO_PI, Configuration, wrap_angle
from .mission import AngularInterval, Behavior, Mission, TargetSpec, UavParams
from .visibility import (
    DwellLoop,
    VisibilityRegion,
    build_visibility_region,
    config_in_dwl,
    dwell_time,
)

log = logging.getLogger(__name__)

_GRID_TOL = 1e-9


@dataclass(frozen=True)
class SpacingParams:
    delta_r: float
    delta_theta: float
    delta_alpha: float

    def __post_init__(self):
        for name in ("delta_r", "delta_theta", "delta_alpha"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")

    def halved(self) -> SpacingParams:
        return SpacingParams(self.delta_r / 2, self.delta_theta / 2, self.delta_alpha / 2)


PRESETS = {
    "condition1": SpacingParams(1000.0, math.pi, math.pi),
    "condition2": SpacingParams(500.0, math.pi, math.pi),
    "condition3": SpacingParams(500.0, math.pi / 2, math.pi / 2),
    "condition4": SpacingParams(250.0, math.pi / 2, math.pi / 2),
    "condition5": SpacingParams(250.0, math.pi / 4, math.pi / 4),
    "condition6": SpacingParams(125.0, math.pi / 4, math.pi / 4),
    "condition7": SpacingParams(125.0, math.pi / 8, math.pi / 8),
}

_TRIPLE = re.compile(r"^\s*dr=([^,]+),\s*dtheta=([^,]+),\s*dalpha=([^,]+)\s*$")


def parse_spacing(text: str) -> SpacingParams:
    """A preset name (``condition1`` .. ``condition7``) or ``dr=..,dtheta=..,dalpha=..``."""
    if text in PRESETS:
        return PRESETS[text]
    m = _TRIPLE.match(text)
    if not m:
        raise ValueError(f"unknown spacing {text!r}; use a preset name or dr=..,dtheta=..,dalpha=..")
    return SpacingParams(*(float(g) for g in m.groups()))


def spacing_label(sp: SpacingParams) -> str:
    for name, preset in PRESETS.items():
        if preset == sp:
            return name
    return f"dr={sp.delta_r:g},dtheta={sp.delta_theta:g},dalpha={sp.delta_alpha:g}"


@dataclass(frozen=True)
class SampledNode:
    node_id: int
    config: Configuration
    target_index: int
    loop: DwellLoop
    dwell_seconds: float


class SamplingError(RuntimeError):
    """Some target received no samples at the requested spacing."""

    def __init__(self, target_ids):
        self.target_ids = list(target_ids)
        super().__init__("no grid sample lands in DWL for target(s) " + ", ".join(self.target_ids))


def radial_grid(lo: float, hi: float, step: float) -> list[float]:
    if hi < lo - _GRID_TOL:
        return []
    out = []
    k = 0
    while lo + k * step < hi - _GRID_TOL:
        out.append(lo + k * step)
        k += 1
    out.append(hi)
    return out


def bearing_grid(angular: AngularInterval, step: float) -> list[float]:
    if angular.is_full:
        n = math.ceil(TWO_PI / step - _GRID_TOL)
        return [k * step for k in range(n)]
    out = []
    k = 0
    while k * step < angular.extent - _GRID_TOL:
        out.append(angular.start + k * step)
        k += 1
    out.append(angular.end)
    return out


def heading_grid(step: float) -> list[float]:
    n = math.ceil(TWO_PI / step - _GRID_TOL)
    return [k * step for k in range(n)]


def _key(x, y, h):
    return (round(x, 7), round(y, 7), round(wrap_angle(h), 9) % round(TWO_PI, 9))


def pivot_radial_pieces(region: VisibilityRegion, turn_radius: float) -> list[tuple[float, float]]:
    """Intervals of pivot distances whose loop circle fits the region radially.

    Circles around the target (pivot closer than one turn radius) need the
    pivot itself to stay inside the region, and only exist for full annuli.
    """
    r = turn_radius
    pieces = []
    if region.angular.is_full and r >= 2 * region.r_min:
        hi = min(r - region.r_min, region.r_max - r)
        if hi >= region.r_min - _GRID_TOL:
            pieces.append((region.r_min, max(hi, region.r_min)))
    lo, hi = region.r_min + r, region.r_max - r
    if hi >= lo - _GRID_TOL:
        if pieces and lo <= pieces[-1][1] + _GRID_TOL:
            pieces[-1] = (pieces[-1][0], hi)
        else:
            pieces.append((lo, max(hi, lo)))
    return pieces


def _pivot_bearings(region: VisibilityRegion, d: float, r: float, step: float) -> list[float]:
    if region.angular.is_full:
        return bearing_grid(region.angular, step)
    if d <= r:
        return []
    half = math.asin(r / d)
    extent = region.angular.extent - 2 * half
    if extent < -_GRID_TOL:
        return []
    first = region.angular.start + half
    if extent <= _GRID_TOL:
        return [first]
    return bearing_grid(AngularInterval(first, extent), step)


def _candidates(t: TargetSpec, region: VisibilityRegion, turn_radius: float, sp: SpacingParams):
    r = turn_radius
    if t.loops == 0:
        headings = heading_grid(sp.delta_alpha)
        for rho in radial_grid(region.r_min, region.r_max, sp.delta_r):
            for b in bearing_grid(region.angular, sp.delta_theta):
                x, y = region.point_at(rho, b)
                for h in headings:
                    yield x, y, h
    elif t.behavior is Behavior.FULL:
        for rho in radial_grid(max(r, region.r_min), region.r_max, sp.delta_r):
            for b in bearing_grid(AngularInterval.full(), sp.delta_theta):
                x, y = region.point_at(rho, b)
                for h in sorted((wrap_angle(b + math.pi / 2), wrap_angle(b - math.pi / 2))):
                    yield x, y, h
    else:
        # pivot grid x loop phase x turn direction
        phases = heading_grid(sp.delta_alpha)
        for lo, hi in pivot_radial_pieces(region, r):
            for d in radial_grid(lo, hi, sp.delta_r):
                for b in _pivot_bearings(region, d, r, sp.delta_theta):
                    px, py = region.point_at(d, b)
                    for psi in phases:
                        x, y = px + r * math.cos(psi), py + r * math.sin(psi)
                        yield x, y, psi + math.pi / 2
                        yield x, y, psi - math.pi / 2


def sample_target(
    t: TargetSpec,
    region: VisibilityRegion,
    uav: UavParams,
    sp: SpacingParams,
    target_index: int = 0,
    first_id: int = 0,
) -> list[SampledNode]:
    """Grid samples of DWL for one target, in (radius, bearing, heading) order."""
    nodes = []
    seen = set()
    for x, y, h in _candidates(t, region, uav.turn_radius, sp):
        key = _key(x, y, h)
        if key in seen:
            continue
        seen.add(key)
        v = Configuration(x, y, h)
        loop = config_in_dwl(v, t, region, uav.turn_radius)
        if loop is None:
            continue
        nodes.append(
            SampledNode(first_id + len(nodes), v, target_index, loop, dwell_time(loop, uav.speed))
        )
    return nodes


def sample_mission(m: Mission, sp: SpacingParams, regions=None) -> list[SampledNode]:
    """Samples for every target, ordered by target; node ids are list positions.

    Raises SamplingError naming the targets that received no samples.
    """
    if regions is None:
        regions = [build_visibility_region(t, m.uav.altitude) for t in m.targets]
    nodes: list[SampledNode] = []
    empty = []
    for j, (t, region) in enumerate(zip(m.targets, regions)):
        batch = sample_target(t, region, m.uav, sp, target_index=j, first_id=len(nodes))
        log.debug("target %s: %d samples", t.id, len(batch))
        if not batch:
            empty.append(t.id)
        nodes.extend(batch)
    if empty:
        raise SamplingError(empty)
    return nodes


def counts_by_target(nodes, n_targets: int) -> list[int]:
    counts = [0] * n_targets
    for v in nodes:
        counts[v.target_index] += 1
    return counts
