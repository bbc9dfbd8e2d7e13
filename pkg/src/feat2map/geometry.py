"""Planar geometry: points, angles and cubic Bezier reference paths.

Angles are plain floats in radians. Canonical angles live in (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from .errors import (
    DegenerateCurve,
    DegenerateTangent,
    DuplicateSocketAngle,
    ParameterOutOfRange,
    ZeroLengthCurve,
)

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-6
POLYLINE_SAMPLES = 33


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> "Point2":
        return Point2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def angle(self) -> float:
        return math.atan2(self.y, self.x)

    def as_tuple(self) -> tuple:
        return (self.x, self.y)

    @classmethod
    def polar(cls, r: float, theta: float) -> "Point2":
        return cls(r * math.cos(theta), r * math.sin(theta))


def normalize_angle(theta: float) -> float:
    """Wrap ``theta`` into (-pi, pi]."""
    wrapped = math.remainder(theta, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def angle_diff(a: float, b: float) -> float:
    """Signed smallest difference ``a - b`` in (-pi, pi]."""
    return normalize_angle(a - b)


def ccw_angle(theta: float) -> float:
    """Angle measured counter-clockwise from East, in [0, 2*pi)."""
    v = math.fmod(theta, TWO_PI)
    if v < 0:
        v += TWO_PI
    if v >= TWO_PI:
        v = 0.0
    return v


@dataclass(frozen=True)
class CubicBezier:
    p0: Point2
    p1: Point2
    p2: Point2
    p3: Point2

    def __post_init__(self):
        if self.p0 == self.p1 == self.p2 == self.p3:
            raise DegenerateCurve("all four control points coincide")

    @property
    def points(self) -> tuple:
        return (self.p0, self.p1, self.p2, self.p3)

    @property
    def start(self) -> Point2:
        return self.p0

    @property
    def end(self) -> Point2:
        return self.p3

    def reversed(self) -> "CubicBezier":
        return CubicBezier(self.p3, self.p2, self.p1, self.p0)


def bezier_from_endpoints(
    start: Point2, start_heading: float, end: Point2, end_heading: float
) -> CubicBezier:
    """Control points from endpoint poses; both handle lengths are half the chord."""
    chord = start.dist(end)
    if chord == 0.0:
        raise ZeroLengthCurve(f"start and end coincide at {start}")
    d = chord / 2.0
    p1 = start + Point2.polar(d, start_heading)
    p2 = end - Point2.polar(d, end_heading)
    return CubicBezier(start, p1, p2, end)


def _check_t(t: float) -> None:
    if not (0.0 <= t <= 1.0):
        raise ParameterOutOfRange(f"t={t} outside [0, 1]")


def bezier_eval(curve: CubicBezier, t: float) -> Point2:
    _check_t(t)
    s = 1.0 - t
    b0, b1, b2, b3 = s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t
    p0, p1, p2, p3 = curve.points
    return Point2(
        b0 * p0.x + b1 * p1.x + b2 * p2.x + b3 * p3.x,
        b0 * p0.y + b1 * p1.y + b2 * p2.y + b3 * p3.y,
    )


def bezier_derivative(curve: CubicBezier, t: float) -> Point2:
    _check_t(t)
    s = 1.0 - t
    p0, p1, p2, p3 = curve.points
    a, b, c = 3.0 * s * s, 6.0 * s * t, 3.0 * t * t
    return Point2(
        a * (p1.x - p0.x) + b * (p2.x - p1.x) + c * (p3.x - p2.x),
        a * (p1.y - p0.y) + b * (p2.y - p1.y) + c * (p3.y - p2.y),
    )


def bezier_heading(curve: CubicBezier, t: float) -> float:
    d = bezier_derivative(curve, t)
    if d.x == 0.0 and d.y == 0.0:
        raise DegenerateTangent(f"zero tangent at t={t}")
    return math.atan2(d.y, d.x)


def sample_bezier(curve: CubicBezier, n: int = POLYLINE_SAMPLES) -> np.ndarray:
    """Polyline of ``n`` t-uniform samples, shape (n, 2)."""
    t = np.linspace(0.0, 1.0, n)[:, None]
    s = 1.0 - t
    ctrl = np.array([p.as_tuple() for p in curve.points])
    return (
        s**3 * ctrl[0] + 3 * s**2 * t * ctrl[1] + 3 * s * t**2 * ctrl[2] + t**3 * ctrl[3]
    )


def perpendicular_offset(point: Point2, heading: float, offset: float) -> Point2:
    """Shift ``point`` sideways; positive offsets go to the right of travel."""
    right = heading - math.pi / 2.0
    return Point2(point.x + offset * math.cos(right), point.y + offset * math.sin(right))


def sort_ccw(angles: Iterable[float]) -> List[float]:
    """Sort angles counter-clockwise starting from East."""
    return sorted(angles, key=ccw_angle)


def ccw_gap_angles(socket_angles: Sequence[float]) -> List[float]:
    """Gaps between consecutive sockets in CCW order, starting from the first
    socket counter-clockwise of East. The gaps sum to 2*pi."""
    if len(socket_angles) < 2:
        raise DuplicateSocketAngle("need at least two distinct socket angles")
    ordered = sorted(ccw_angle(a) for a in socket_angles)
    gaps = []
    for i, a in enumerate(ordered):
        nxt = ordered[i + 1] if i + 1 < len(ordered) else ordered[0] + TWO_PI
        gap = nxt - a
        if gap < ANGLE_TOL or gap > TWO_PI - ANGLE_TOL:
            raise DuplicateSocketAngle(f"socket angles coincide near {math.degrees(a):.6f} deg")
        gaps.append(gap)
    # absorb rounding so the sum is 2*pi to the last bit we can control
    gaps[-1] = TWO_PI - sum(gaps[:-1])
    return gaps


def point_segment_distance(p: Point2, a: Point2, b: Point2) -> float:
    ab = b - a
    denom = ab.x * ab.x + ab.y * ab.y
    if denom == 0.0:
        return p.dist(a)
    u = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / denom
    u = min(1.0, max(0.0, u))
    return p.dist(a + ab * u)
