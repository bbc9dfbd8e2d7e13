"""Junction feature vectors, rotation normalization and map-level aggregation.

A junction is summarized by four features: its road count, the normalized
socket angles measured from East, its control type and whether it carries
crosswalks. Rotation vectors are kept on an unwrapped CCW scale anchored at
the first socket, so the angles strictly increase and span less than a turn.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateJunction,
    EmptyInput,
    GapSumMismatch,
    InvalidFeature,
    NoJunctions,
    UnknownJunction,
)
from .geometry import ANGLE_TOL, TWO_PI, ccw_angle, ccw_gap_angles, normalize_angle
from .model import Control, MapDoc, RoadSocket, SocketType

QUARTER = math.pi / 2.0
GAP_SUM_TOL = 1e-6
# objective values closer than this are treated as a draw
OBJECTIVE_TIE = 1e-12
# gaps closer than this compete for the "largest gap" anchor as equals
GAP_TIE = 1e-9


def unwrap_ccw(angles: Sequence[float]) -> List[float]:
    """Rewrite angles so each one exceeds its predecessor by its CCW gap.

    Raises InvalidFeature if the sequence is not in counter-clockwise order
    or winds more than once around the junction.
    """
    if not angles:
        return []
    out = [float(angles[0])]
    for a in angles[1:]:
        gap = ccw_angle(a - out[-1])
        if gap < ANGLE_TOL:
            raise InvalidFeature("socket angles must be distinct and counter-clockwise")
        out.append(out[-1] + gap)
    if out[-1] - out[0] > TWO_PI - ANGLE_TOL:
        raise InvalidFeature("socket angles wind more than one full turn")
    return out


def rotation_gaps(f_rot: Sequence[float]) -> List[float]:
    """CCW gaps of an unwrapped rotation vector, first gap after socket 1."""
    gaps = [f_rot[i + 1] - f_rot[i] for i in range(len(f_rot) - 1)]
    gaps.append(TWO_PI - (f_rot[-1] - f_rot[0]))
    return gaps


def cardinal_index(angle: float) -> int:
    """Nearest of East/North/West/South as 0..3."""
    return int(math.floor(angle / QUARTER + 0.5)) % 4


@dataclass(frozen=True)
class JunctionFeature:
    f_road: int
    f_rot: Tuple[float, ...]
    f_ctrl: Control
    f_xwlk: bool
    socket_types: Tuple[SocketType, ...] = ()

    def __post_init__(self):
        if self.f_road < 3:
            raise InvalidFeature(f"a junction needs at least 3 roads, got {self.f_road}")
        if len(self.f_rot) != self.f_road:
            raise InvalidFeature(f"f_rot has {len(self.f_rot)} angles for {self.f_road} roads")
        if not all(math.isfinite(a) for a in self.f_rot):
            raise InvalidFeature("f_rot contains a non-finite angle")
        object.__setattr__(self, "f_rot", tuple(unwrap_ccw(self.f_rot)))
        object.__setattr__(self, "f_ctrl", Control(self.f_ctrl))
        object.__setattr__(self, "f_xwlk", bool(self.f_xwlk))
        types = tuple(SocketType(t) for t in self.socket_types) or (SocketType.IN_OUT,) * self.f_road
        if len(types) != self.f_road:
            raise InvalidFeature(f"{len(types)} socket types for {self.f_road} roads")
        object.__setattr__(self, "socket_types", types)

    @property
    def cell(self) -> Tuple[int, Control, bool]:
        return (self.f_road, self.f_ctrl, self.f_xwlk)

    def cardinal_directions(self) -> List[int]:
        return [cardinal_index(a) for a in self.f_rot]

    def grid_placeable(self) -> bool:
        dirs = self.cardinal_directions()
        return len(dirs) <= 4 and len(set(dirs)) == len(dirs)


Interval = Tuple[float, float]


def within_interval(x: float, lo: float, hi: float, tol: float = 0.0) -> bool:
    """Whether some 2*pi-shift of ``x`` lies in [lo - tol, hi + tol]."""
    k = math.ceil((lo - tol - x) / TWO_PI)
    return x + k * TWO_PI <= hi + tol


@dataclass(frozen=True)
class MapFeature:
    road_set: FrozenSet[int]
    ctrl_set: FrozenSet[Control]
    xwlk_set: FrozenSet[bool]
    rot_ranges: Dict[int, Tuple[Interval, ...]] = field(hash=False)

    def __post_init__(self):
        object.__setattr__(self, "road_set", frozenset(int(n) for n in self.road_set))
        object.__setattr__(self, "ctrl_set", frozenset(Control(c) for c in self.ctrl_set))
        object.__setattr__(self, "xwlk_set", frozenset(bool(x) for x in self.xwlk_set))
        ranges = {int(n): tuple((float(lo), float(hi)) for lo, hi in iv) for n, iv in self.rot_ranges.items()}
        object.__setattr__(self, "rot_ranges", ranges)
        if not (self.road_set and self.ctrl_set and self.xwlk_set):
            raise InvalidFeature("feature sets must be non-empty")
        for n in self.road_set:
            if n < 3:
                raise InvalidFeature(f"road count {n} below 3")
            if n not in ranges:
                raise InvalidFeature(f"no rotation range for {n}-legged junctions")
            if len(ranges[n]) != n:
                raise InvalidFeature(f"rotation range for n={n} has {len(ranges[n])} intervals")
            for lo, hi in ranges[n]:
                if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                    raise InvalidFeature(f"bad interval [{lo}, {hi}] for n={n}")

    def cells(self) -> List[Tuple[int, Control, bool]]:
        """Discrete feature combinations in generation order."""
        ctrl_order = [c for c in Control if c in self.ctrl_set]
        xwlk_order = [x for x in (True, False) if x in self.xwlk_set]
        return [
            (n, c, x)
            for n in sorted(self.road_set)
            for c in ctrl_order
            for x in xwlk_order
        ]

    def contains_rotation(self, f_rot: Sequence[float], tol: float = 0.0) -> bool:
        ranges = self.rot_ranges.get(len(f_rot))
        if ranges is None:
            return False
        return all(within_interval(a, lo, hi, tol) for a, (lo, hi) in zip(f_rot, ranges))


def merge_map_features(a: MapFeature, b: MapFeature) -> MapFeature:
    ranges = dict(a.rot_ranges)
    for n, iv in b.rot_ranges.items():
        if n in ranges:
            ranges[n] = tuple((min(x[0], y[0]), max(x[1], y[1])) for x, y in zip(ranges[n], iv))
        else:
            ranges[n] = iv
    return MapFeature(a.road_set | b.road_set, a.ctrl_set | b.ctrl_set, a.xwlk_set | b.xwlk_set, ranges)


# --- rotation normalization -------------------------------------------------


@lru_cache(maxsize=None)
def _assignment_table(n: int) -> np.ndarray:
    """All 2**n choices of lower/upper neighbouring cardinal, shape (2**n, n)."""
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)


def rotation_objective(alpha: float, offsets: Sequence[float]) -> float:
    """Sum of squared deviations of each socket from its nearest cardinal."""
    x = alpha + np.asarray(offsets, dtype=float)
    r = x - np.round(x / QUARTER) * QUARTER
    return float(np.dot(r, r))


def _anchor(gaps: Sequence[float]) -> int:
    """Index of the socket that closes the largest gap (first one on a draw)."""
    top = max(gaps)
    widest = next(i for i, g in enumerate(gaps) if g >= top - GAP_TIE)
    return (widest + 1) % len(gaps)


def _solve(gaps: Sequence[float]) -> Tuple[float, List[float], int]:
    n = len(gaps)
    if n < 1 or any(not (0.0 < g < TWO_PI) for g in gaps):
        raise GapSumMismatch("every gap must lie strictly between 0 and 2*pi")
    total = math.fsum(gaps)
    if abs(total - TWO_PI) > GAP_SUM_TOL:
        raise GapSumMismatch(f"gaps sum to {math.degrees(total):.6f} deg, expected 360")
    shift = _anchor(gaps)
    g = list(gaps[shift:]) + list(gaps[:shift])
    offsets = np.concatenate(([0.0], np.cumsum(g[:-1])))

    # Each socket deviates least from one of the two cardinals bracketing its
    # offset once alpha is restricted to one period; the objective is then a
    # quadratic in alpha per assignment with a closed-form minimizer.
    lower = np.floor(offsets / QUARTER)
    cards = (lower + _assignment_table(n)) * QUARTER
    alphas = (cards - offsets).mean(axis=1)
    alphas = alphas - np.round(alphas / QUARTER) * QUARTER  # canonical (-pi/4, pi/4]
    alphas = np.where(alphas <= -QUARTER / 2, alphas + QUARTER, alphas)
    x = alphas[:, None] + offsets[None, :]
    resid = x - np.round(x / QUARTER) * QUARTER
    objective = (resid * resid).sum(axis=1)

    best = objective.min()
    candidates = np.flatnonzero(objective <= best + OBJECTIVE_TIE)
    # draw: smaller |alpha|, then the lexicographically first assignment
    pick = min(candidates, key=lambda i: (round(abs(alphas[i]), 12), i))
    alpha = float(alphas[pick])
    return alpha, [alpha + float(o) for o in offsets], shift


def normalize_rotation(gaps: Sequence[float]) -> Tuple[float, List[float]]:
    """Rotate a junction so its sockets sit as close as possible to the four
    cardinal directions.

    ``gaps[i]`` is the CCW angle from socket i to socket i+1 (radians). The
    sockets are re-indexed so the first one is the socket reached across the
    largest gap, which leaves the largest gap last. The returned ``f_rot``
    gives each socket's angle from East on an unwrapped scale, ``f_rot[0] ==
    alpha_opt``.
    """
    alpha, f_rot, _ = _solve(gaps)
    return alpha, f_rot


# --- extraction ------------------------------------------------------------


def compute_road_sockets(doc: MapDoc, junction_id: str) -> List[RoadSocket]:
    if junction_id not in doc.junctions:
        raise UnknownJunction(junction_id)
    j = doc.junctions[junction_id]
    if len(j.sockets) < 3:
        raise DegenerateJunction(f"{junction_id} connects {len(j.sockets)} roads")
    sockets = [
        RoadSocket(s.road_id, s.endpoint, normalize_angle((s.endpoint - j.center).angle()))
        for s in j.sockets
    ]
    return sorted(sockets, key=lambda s: ccw_angle(s.angle))


def _socket_type_at(doc: MapDoc, junction_id: str, road_id: str) -> SocketType:
    incoming, outgoing = doc.roads[road_id].lanes_at(junction_id)
    if incoming is not None and outgoing is not None:
        return SocketType.IN_OUT
    return SocketType.IN if incoming is not None else SocketType.OUT


def junction_feature(doc: MapDoc, junction_id: str) -> JunctionFeature:
    sockets = compute_road_sockets(doc, junction_id)
    gaps = ccw_gap_angles([s.angle for s in sockets])
    _, f_rot, shift = _solve(gaps)
    ordered = sockets[shift:] + sockets[:shift]
    j = doc.junctions[junction_id]
    return JunctionFeature(
        f_road=len(sockets),
        f_rot=tuple(f_rot),
        f_ctrl=j.control,
        f_xwlk=j.has_crosswalks,
        socket_types=tuple(_socket_type_at(doc, junction_id, s.road_id) for s in ordered),
    )


def map_feature_from_junctions(features: Iterable[JunctionFeature]) -> MapFeature:
    features = list(features)
    if not features:
        raise NoJunctions("no junction features to aggregate")
    ranges: Dict[int, List[List[float]]] = {}
    for f in features:
        cur = ranges.setdefault(f.f_road, [[a, a] for a in f.f_rot])
        for iv, a in zip(cur, f.f_rot):
            iv[0] = min(iv[0], a)
            iv[1] = max(iv[1], a)
    return MapFeature(
        road_set={f.f_road for f in features},
        ctrl_set={f.f_ctrl for f in features},
        xwlk_set={f.f_xwlk for f in features},
        rot_ranges={n: tuple(map(tuple, iv)) for n, iv in ranges.items()},
    )


def extract_map_feature(maps: Sequence[MapDoc]) -> MapFeature:
    """Union of discrete feature values and element-wise rotation ranges."""
    if not maps:
        raise EmptyInput("no maps given")
    features = []
    for doc in maps:
        if not doc.junctions:
            raise NoJunctions(f"map {doc.metadata.get('name', '?')!r} has no junctions")
        features.extend(junction_feature(doc, jid) for jid in doc.junctions)
    return map_feature_from_junctions(features)
