"""Ready-made feature sets used by the examples, tests and CLI."""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

from .features import JunctionFeature, MapFeature
from .geometry import Point2
from .model import Control, SocketType
from .synthesis import RoadChainSpec, RoadSegment


def _ranges(deg: Dict[int, Sequence[Tuple[float, float]]]):
    return {n: [(math.radians(lo), math.radians(hi)) for lo, hi in iv] for n, iv in deg.items()}


# rotation ranges in degrees, socket order after normalization
CITY_ROT_DEG = {
    3: [(-22.62, 9.81), (61.40, 126.22), (-143.45, 200.92)],
    4: [(-5.26, 13.61), (-75.63, 93.10), (-176.85, 191.76), (-109.24, -87.91)],
}
MERGED_ROT_DEG = {
    3: [(-23.58, 28.03), (61.4, 127.39), (140.41, 213.36)],
    4: [(-7.49, 13.61), (60.46, 134.06), (142.18, 214.47), (-109.24, -69.95)],
}


def city_feature() -> MapFeature:
    """Single-city feature set: 3/4 legs, signal or stop, with or without crosswalks."""
    return MapFeature({3, 4}, {Control.SIGNAL, Control.STOP}, {True, False}, _ranges(CITY_ROT_DEG))


def merged_feature() -> MapFeature:
    """Three-city merge, which adds uncontrolled junctions."""
    return MapFeature(
        {3, 4}, {Control.SIGNAL, Control.STOP, Control.BARE}, {True, False}, _ranges(MERGED_ROT_DEG)
    )


def mega_junction() -> List[JunctionFeature]:
    rot = [math.radians(a) for a in (0.0, 72.0, 144.0, 216.0, 288.0)]
    return [JunctionFeature(5, tuple(rot), Control.SIGNAL, True)]


def one_way_t_junction() -> List[JunctionFeature]:
    rot = [math.radians(a) for a in (0.0, 90.0, 180.0)]
    return [
        JunctionFeature(
            3, tuple(rot), Control.SIGNAL, False, (SocketType.IN, SocketType.OUT, SocketType.IN_OUT)
        )
    ]


def road_circle(radius: float = 60.0, center: Point2 = Point2(0.0, 0.0)) -> RoadChainSpec:
    """Four quarter arcs closing a loop, counter-clockwise from East."""
    segs = []
    for k in range(4):
        a0, a1 = k * math.pi / 2, (k + 1) * math.pi / 2
        segs.append(
            RoadSegment(
                center + Point2.polar(radius, a0),
                a0 + math.pi / 2,
                center + Point2.polar(radius, a1),
                a1 + math.pi / 2,
            )
        )
    return RoadChainSpec(tuple(segs))


PRESETS = {
    "city": city_feature,
    "merged": merged_feature,
}
EXPLICIT_PRESETS = {
    "mega": mega_junction,
    "oneway-t": one_way_t_junction,
}
