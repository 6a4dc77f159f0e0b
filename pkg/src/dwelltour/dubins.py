"""Shortest Dubins paths between planar configurations.

The six candidate words are evaluated in a normalized frame (start at the
origin, goal on the +x axis, unit turn radius).  The numeric core is compiled
with numba so the same code serves single queries and the dense
all-pairs matrices used by the roadmap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

TWO_PI = 2.0 * math.pi
WORDS = ("LSL", "LSR", "RSL", "RSR", "RLR", "LRL")

# extents this close to a full turn are numerical zeros
_SNAP = 1e-10
_COINCIDENT = 1e-9


def wrap_angle(theta: float) -> float:
    """Map an angle to [0, 2*pi)."""
    w = math.fmod(theta, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    if w >= TWO_PI:
        w = 0.0
    return w


def angle_distance(a: float, b: float) -> float:
    """Unsigned wrap-aware distance between two angles, in [0, pi]."""
    d = wrap_angle(a - b)
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class Configuration:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError(f"non-finite configuration {self.x!r}, {self.y!r}, {self.heading!r}")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.heading)

    def is_close(self, other: Configuration, tol: float = _COINCIDENT) -> bool:
        return (
            math.hypot(self.x - other.x, self.y - other.y) <= tol
            and angle_distance(self.heading, other.heading) <= tol
        )


@dataclass(frozen=True)
class DubinsPath:
    """One of the six Dubins words with its three segment extents.

    Turn extents are radians, the straight extent of CSC words is meters.
    """

    word: str
    segment_params: tuple[float, float, float]
    turn_radius: float
    total_length: float

    def segment_lengths(self) -> tuple[float, float, float]:
        r = self.turn_radius
        return tuple(
            p if kind == "S" else p * r for kind, p in zip(self.word, self.segment_params)
        )

    def endpoint(self, start: Configuration) -> Configuration:
        return self.config_at(start, self.total_length)

    def config_at(self, start: Configuration, s: float) -> Configuration:
        """Configuration reached after flying arc length ``s`` from ``start``."""
        x, y, h = start.x, start.y, start.heading
        remaining = max(0.0, min(s, self.total_length))
        for kind, seg in zip(self.word, self.segment_lengths()):
            if remaining <= 0.0:
                break
            step = min(seg, remaining)
            x, y, h = _advance(x, y, h, kind, step, self.turn_radius)
            remaining -= step
        return Configuration(x, y, h)

    def sample(self, start: Configuration, step: float) -> list[Configuration]:
        return sample_path_points(self, start, step)


def _advance(x, y, h, kind, length, r):
    if kind == "S":
        return x + length * math.cos(h), y + length * math.sin(h), h
    phi = length / r
    if kind == "L":
        return (
            x + r * (math.sin(h + phi) - math.sin(h)),
            y - r * (math.cos(h + phi) - math.cos(h)),
            h + phi,
        )
    return (
        x - r * (math.sin(h - phi) - math.sin(h)),
        y + r * (math.cos(h - phi) - math.cos(h)),
        h - phi,
    )


# ---------------------------------------------------------------------------
# compiled core


@numba.njit(cache=True)
def _mod2pi(a):
    m = a - TWO_PI * math.floor(a / TWO_PI)
    if m >= TWO_PI - _SNAP or m < 0.0:
        return 0.0
    return m


@numba.njit(cache=True)
def _word_params(k, alpha, beta, d):
    """Normalized (t, p, q) for word ``k``; ok=False when the word does not exist."""
    return _word_params_trig(
        k, alpha, beta, d, math.sin(alpha), math.cos(alpha), math.sin(beta), math.cos(beta)
    )


@numba.njit(cache=True)
def _word_params_trig(k, alpha, beta, d, sa, ca, sb, cb):
    # 1 - cos(alpha - beta), cos(beta) - cos(alpha) and sin(alpha) - sin(beta)
    # cancel catastrophically for nearly equal angles; use half-angle forms there
    half = 0.5 * (alpha - beta)
    if abs(half) < 1e-3 or abs(abs(half) - math.pi) < 1e-3:
        sh = math.sin(half)
        mid = 0.5 * (alpha + beta)
        one_m_cab = 2.0 * sh * sh
        dc = 2.0 * math.sin(mid) * sh
        ds = 2.0 * math.cos(mid) * sh
    else:
        one_m_cab = 1.0 - (ca * cb + sa * sb)
        dc = cb - ca
        ds = sa - sb
    if k == 0:  # LSL
        p2 = d * d + 2.0 * one_m_cab + 2.0 * d * ds
        tmp = math.atan2(dc, d + ds)
        return True, _mod2pi(-alpha + tmp), math.sqrt(max(p2, 0.0)), _mod2pi(beta - tmp)
    cab = 1.0 - one_m_cab
    if k == 1:  # LSR
        p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb)
        if p2 < -1e-12:
            return False, 0.0, 0.0, 0.0
        p = math.sqrt(max(p2, 0.0))
        tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
        return True, _mod2pi(-alpha + tmp), p, _mod2pi(-beta + tmp)
    if k == 2:  # RSL
        p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb)
        if p2 < -1e-12:
            return False, 0.0, 0.0, 0.0
        p = math.sqrt(max(p2, 0.0))
        tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
        return True, _mod2pi(alpha - tmp), p, _mod2pi(beta - tmp)
    if k == 3:  # RSR
        p2 = d * d + 2.0 * one_m_cab - 2.0 * d * ds
        tmp = math.atan2(-dc, d - ds)
        return True, _mod2pi(alpha - tmp), math.sqrt(max(p2, 0.0)), _mod2pi(-beta + tmp)
    if k == 4:  # RLR
        u = (2.0 * one_m_cab + d * d - 2.0 * d * ds) / 8.0
        if u > 2.0 + 1e-12:
            return False, 0.0, 0.0, 0.0
        # middle arc 2*pi - acos(1 - u) in (pi, 2*pi]; the asin form keeps
        # precision when u is tiny, and the arc is never wrapped to zero
        p = TWO_PI - 2.0 * math.asin(math.sqrt(min(1.0, max(0.0, u / 2.0))))
        t = _mod2pi(alpha - math.atan2(-dc, d - ds) + p / 2.0)
        return True, t, p, _mod2pi(alpha - beta - t + p)
    # LRL
    u = (2.0 * one_m_cab + d * d + 2.0 * d * ds) / 8.0
    if u > 2.0 + 1e-12:
        return False, 0.0, 0.0, 0.0
    p = TWO_PI - 2.0 * math.asin(math.sqrt(min(1.0, max(0.0, u / 2.0))))
    t = _mod2pi(-alpha - math.atan2(-dc, d + ds) + p / 2.0)
    return True, t, p, _mod2pi(beta - alpha - t + p)


@numba.njit(cache=True)
def _frame(x0, y0, h0, x1, y1, h1, r):
    dx = x1 - x0
    dy = y1 - y0
    d = math.sqrt(dx * dx + dy * dy) / r
    phi = math.atan2(dy, dx)
    return _mod2pi(h0 - phi), _mod2pi(h1 - phi), d


@numba.njit(cache=True)
def _coincident(x0, y0, h0, x1, y1, h1):
    if math.sqrt((x1 - x0) ** 2 + (y1 - y0) ** 2) > _COINCIDENT:
        return False
    dh = _mod2pi(h1 - h0)
    return min(dh, TWO_PI - dh) <= _COINCIDENT


@numba.njit(cache=True)
def _shortest(x0, y0, h0, x1, y1, h1, r):
    """Best word index, its normalized params and normalized length."""
    if _coincident(x0, y0, h0, x1, y1, h1):
        return 0, 0.0, 0.0, 0.0, 0.0
    alpha, beta, d = _frame(x0, y0, h0, x1, y1, h1, r)
    sa = math.sin(alpha)
    ca = math.cos(alpha)
    sb = math.sin(beta)
    cb = math.cos(beta)
    best_k = -1
    best = (0.0, 0.0, 0.0)
    best_len = np.inf
    for k in range(6):
        ok, t, p, q = _word_params_trig(k, alpha, beta, d, sa, ca, sb, cb)
        if ok:
            total = t + p + q
            if total < best_len:
                best_len = total
                best_k = k
                best = (t, p, q)
    return best_k, best[0], best[1], best[2], best_len


@numba.njit(cache=True)
def _length_matrix(src, dst, r):
    n = src.shape[0]
    m = dst.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            out[i, j] = _shortest(
                src[i, 0], src[i, 1], src[i, 2], dst[j, 0], dst[j, 1], dst[j, 2], r
            )[4] * r
    return out


# ---------------------------------------------------------------------------
# public API


def _to_path(k: int, t: float, p: float, q: float, r: float) -> DubinsPath:
    word = WORDS[k]
    params = (t, p * r, q) if word[1] == "S" else (t, p, q)
    return DubinsPath(word, params, r, (t + p + q) * r)


def dubins_shortest_path(start: Configuration, goal: Configuration, turn_radius: float) -> DubinsPath:
    """Minimum-length Dubins path; ties resolved in the order of ``WORDS``."""
    if not turn_radius > 0:
        raise ValueError("turn_radius must be positive")
    k, t, p, q, _ = _shortest(*start.as_tuple(), *goal.as_tuple(), float(turn_radius))
    return _to_path(k, t, p, q, float(turn_radius))


def dubins_word(word: str, start: Configuration, goal: Configuration, turn_radius: float) -> DubinsPath | None:
    """Path for one specific word, or None when that word cannot connect the pair."""
    k = WORDS.index(word)
    alpha, beta, d = _frame(*start.as_tuple(), *goal.as_tuple(), float(turn_radius))
    ok, t, p, q = _word_params(k, alpha, beta, d)
    return _to_path(k, t, p, q, float(turn_radius)) if ok else None


def dubins_length(start: Configuration, goal: Configuration, turn_radius: float) -> float:
    return dubins_shortest_path(start, goal, turn_radius).total_length


def dubins_time(start: Configuration, goal: Configuration, turn_radius: float, speed: float) -> float:
    if not speed > 0:
        raise ValueError("speed must be positive")
    return dubins_length(start, goal, turn_radius) / speed


def dubins_length_matrix(sources, targets, turn_radius: float) -> np.ndarray:
    """All-pairs shortest path lengths between two arrays of (x, y, heading) rows."""
    src = np.ascontiguousarray(np.asarray(sources, dtype=float).reshape(-1, 3))
    dst = np.ascontiguousarray(np.asarray(targets, dtype=float).reshape(-1, 3))
    return _length_matrix(src, dst, float(turn_radius))


def sample_path_points(path: DubinsPath, start: Configuration, step: float) -> list[Configuration]:
    """Configurations at equal arc-length spacing no larger than ``step``.

    Both the start and the path endpoint are included.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if path.total_length <= 0.0:
        return [start]
    n = max(1, math.ceil(path.total_length / step - 1e-9))
    return [path.config_at(start, path.total_length * i / n) for i in range(n + 1)]
