"""Mission model: UAV parameters and the target table, plus JSON ingestion."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .dubins import TWO_PI, Configuration, wrap_angle

# Azimuths are bearings of the UAV seen from the target, counter-clockwise
# from +x.  Set to pi to interpret them as camera look directions instead.
AZIMUTH_OFFSET = 0.0


class Behavior(str, Enum):
    ANY = "ANY"
    ANGLE = "ANGLE"
    FULL = "FULL"


class MissionError(ValueError):
    """Invalid mission document; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class AngularInterval:
    start: float
    extent: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.extent)):
            raise ValueError("angular interval must be finite")
        if not self.extent > 0:
            raise ValueError(f"angular extent must be positive, got {self.extent}")
        object.__setattr__(self, "start", wrap_angle(self.start))
        object.__setattr__(self, "extent", min(float(self.extent), TWO_PI))

    @classmethod
    def full(cls) -> AngularInterval:
        return cls(0.0, TWO_PI)

    @classmethod
    def from_bounds(cls, lo: float, hi: float) -> AngularInterval:
        return cls(lo, hi - lo)

    @property
    def is_full(self) -> bool:
        return self.extent >= TWO_PI

    @property
    def end(self) -> float:
        return self.start + self.extent

    def offset(self, theta: float) -> float:
        """Counter-clockwise offset of ``theta`` from the interval start, in [0, 2*pi)."""
        return wrap_angle(theta - self.start)

    def contains(self, theta: float, tol: float = 1e-12) -> bool:
        if self.is_full:
            return True
        off = self.offset(theta)
        return off <= self.extent + tol or off >= TWO_PI - tol

    def contains_interval(self, center: float, half_width: float, tol: float = 1e-12) -> bool:
        """True when [center - half_width, center + half_width] lies inside."""
        if self.is_full:
            return True
        if 2.0 * half_width > self.extent + tol:
            return False
        lo = self.offset(center - half_width)
        if lo >= TWO_PI - tol:
            lo = 0.0
        return lo + 2.0 * half_width <= self.extent + tol


@dataclass(frozen=True)
class UavParams:
    turn_radius: float
    altitude: float
    speed: float
    start: Configuration = field(default_factory=lambda: Configuration(0.0, 0.0, 0.0))

    def __post_init__(self):
        for name in ("turn_radius", "altitude", "speed"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class TargetSpec:
    id: str
    location: tuple[float, float]
    behavior: Behavior
    loops: int
    tilt_interval: tuple[float, float]
    azimuth_interval: AngularInterval | None = None

    def __post_init__(self):
        object.__setattr__(self, "behavior", Behavior(self.behavior))
        lo, hi = self.tilt_interval
        if not (0.0 < lo <= hi <= math.pi / 2 + 1e-12):
            raise ValueError(f"tilt interval must satisfy 0 < lo <= hi <= pi/2, got {self.tilt_interval}")
        if self.loops < 0:
            raise ValueError("loops must be non-negative")
        if (self.azimuth_interval is not None) != (self.behavior is Behavior.ANGLE):
            raise ValueError("azimuth interval is required exactly for ANGLE targets")


@dataclass(frozen=True)
class Mission:
    uav: UavParams
    targets: tuple[TargetSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise ValueError("a mission needs at least one target")
        ids = [t.id for t in self.targets]
        if len(set(ids)) != len(ids):
            raise ValueError("target ids must be unique")

    def target_index(self, target_id: str) -> int:
        for j, t in enumerate(self.targets):
            if t.id == target_id:
                return j
        raise KeyError(target_id)


# ---------------------------------------------------------------------------
# file format

_NUMBER = {"type": "number"}
_PAIR = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}

MISSION_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["uav", "targets"],
    "properties": {
        "uav": {
            "type": "object",
            "additionalProperties": False,
            "required": ["turn_radius_m", "altitude_m", "speed_mps", "start"],
            "properties": {
                "turn_radius_m": _NUMBER,
                "altitude_m": _NUMBER,
                "speed_mps": _NUMBER,
                "start": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["x_m", "y_m", "heading_rad"],
                    "properties": {"x_m": _NUMBER, "y_m": _NUMBER, "heading_rad": _NUMBER},
                },
            },
        },
        "targets": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "x_m", "y_m", "behavior", "loops", "tilt_rad"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "x_m": _NUMBER,
                    "y_m": _NUMBER,
                    "behavior": {"enum": [b.value for b in Behavior]},
                    "loops": {"type": "integer"},
                    "tilt_rad": _PAIR,
                    "azimuth_rad": _PAIR,
                },
            },
        },
    },
}


def _field_path(path) -> str:
    parts = []
    for p in path:
        parts.append(f"[{p}]" if isinstance(p, int) else ("." if parts else "") + str(p))
    return "".join(parts) or "<document>"


def _schema_error(err: jsonschema.ValidationError) -> MissionError:
    path = list(err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path.append(extra[0] if extra else "?")
        return MissionError(_field_path(path), "unknown field")
    if err.validator == "required":
        missing = err.message.split("'")[1]
        path.append(missing)
        return MissionError(_field_path(path), "required field missing")
    return MissionError(_field_path(path), err.message)


def _finite(doc: Any, path: list) -> None:
    if isinstance(doc, float) and not math.isfinite(doc):
        raise MissionError(_field_path(path), "non-finite number")
    if isinstance(doc, Mapping):
        for k, v in doc.items():
            _finite(v, path + [k])
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            _finite(v, path + [i])


def parse_mission(document: str | bytes | Mapping[str, Any]) -> Mission:
    """Build a validated Mission from JSON text or an already-decoded mapping."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MissionError("<document>", f"invalid JSON: {exc}") from None
    _finite(document, [])
    validator = jsonschema.Draft7Validator(MISSION_SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(document))
    if err is not None:
        raise _schema_error(err)

    u = document["uav"]
    try:
        start = u["start"]
        uav = UavParams(
            turn_radius=float(u["turn_radius_m"]),
            altitude=float(u["altitude_m"]),
            speed=float(u["speed_mps"]),
            start=Configuration(float(start["x_m"]), float(start["y_m"]), float(start["heading_rad"])),
        )
    except ValueError as exc:
        raise MissionError("uav", str(exc)) from None

    targets = []
    seen = set()
    for i, t in enumerate(document["targets"]):
        where = f"targets[{i}]"
        if t["id"] in seen:
            raise MissionError(f"{where}.id", f"duplicate target id {t['id']!r}")
        seen.add(t["id"])
        if t["loops"] < 0:
            raise MissionError(f"{where}.loops", "must be >= 0")
        lo, hi = (float(v) for v in t["tilt_rad"])
        if not (0.0 < lo <= hi <= math.pi / 2 + 1e-12):
            raise MissionError(f"{where}.tilt_rad", "need 0 < lower <= upper <= pi/2")
        behavior = Behavior(t["behavior"])
        azimuth = None
        if behavior is Behavior.ANGLE:
            if "azimuth_rad" not in t:
                raise MissionError(f"{where}.azimuth_rad", "required for ANGLE targets")
            a_lo, a_hi = (float(v) + AZIMUTH_OFFSET for v in t["azimuth_rad"])
            if not a_hi > a_lo:
                raise MissionError(f"{where}.azimuth_rad", "upper bound must exceed lower bound")
            azimuth = AngularInterval.from_bounds(a_lo, a_hi)
        elif "azimuth_rad" in t:
            raise MissionError(f"{where}.azimuth_rad", f"not allowed for {behavior.value} targets")
        targets.append(
            TargetSpec(
                id=t["id"],
                location=(float(t["x_m"]), float(t["y_m"])),
                behavior=behavior,
                loops=int(t["loops"]),
                tilt_interval=(lo, min(hi, math.pi / 2)),
                azimuth_interval=azimuth,
            )
        )
    return Mission(uav, tuple(targets))


def load_mission(path: str | Path) -> Mission:
    return parse_mission(Path(path).read_text())


def mission_to_dict(m: Mission) -> dict:
    """Inverse of :func:`parse_mission`."""
    targets = []
    for t in m.targets:
        d = {
            "id": t.id,
            "x_m": t.location[0],
            "y_m": t.location[1],
            "behavior": t.behavior.value,
            "loops": t.loops,
            "tilt_rad": list(t.tilt_interval),
        }
        if t.azimuth_interval is not None:
            a = t.azimuth_interval
            d["azimuth_rad"] = [a.start - AZIMUTH_OFFSET, a.start + a.extent - AZIMUTH_OFFSET]
        targets.append(d)
    s = m.uav.start
    return {
        "uav": {
            "turn_radius_m": m.uav.turn_radius,
            "altitude_m": m.uav.altitude,
            "speed_mps": m.uav.speed,
            "start": {"x_m": s.x, "y_m": s.y, "heading_rad": s.heading},
        },
        "targets": targets,
    }


def dump_mission(m: Mission) -> str:
    return json.dumps(mission_to_dict(m), indent=2)


@dataclass(frozen=True)
class Finding:
    target_id: str
    message: str


def validate_mission(m: Mission) -> list[Finding]:
    """Targets that admit no dwell maneuver at all; empty when the mission is feasible."""
    from .visibility import build_visibility_region, dwell_feasible

    findings = []
    for t in m.targets:
        region = build_visibility_region(t, m.uav.altitude)
        if not dwell_feasible(t, region, m.uav.turn_radius):
            if t.behavior is Behavior.FULL:
                msg = f"no orbit of radius >= {m.uav.turn_radius:g} m fits in VIS"
            else:
                msg = f"no radius-{m.uav.turn_radius:g} loop fits in VIS"
            findings.append(Finding(t.id, msg))
    return findings
