"""Feature-driven map synthesis on a square grid.

Pipeline: sample one junction feature per discrete cell, place the
junctions greedily on grid points, then instantiate junctions, roads,
lanes, junction lanes, control devices and crosswalks.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ChainDiscontinuity,
    InvalidFeature,
    NoFeasiblePoint,
    SocketConflict,
    UnsatisfiableRotation,
)
from .features import (
    JunctionFeature,
    MapFeature,
    cardinal_index,
    normalize_rotation,
    rotation_gaps,
    unwrap_ccw,
    within_interval,
)
from .geometry import (
    Point2,
    angle_diff,
    bezier_from_endpoints,
    bezier_heading,
    normalize_angle,
    perpendicular_offset,
)
from .model import (
    Control,
    Crosswalk,
    DeviceKind,
    Junction,
    Lane,
    LaneKind,
    MapDoc,
    Road,
    RoadSocket,
    SocketType,
    TrafficControlDevice,
    validate_map,
)

log = logging.getLogger(__name__)

MAX_RETRIES = 1000
# draws examined while looking for an already-normalized rotation
CANONICAL_SEARCH = 10 * MAX_RETRIES
RANGE_TOL = 1e-9
CROSSWALK_MARGIN = 0.25

GridPoint = Tuple[int, int]
# East, North, West, South
DIRECTIONS: Tuple[GridPoint, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))

# One independent random stream per pipeline stage. Streams are derived from
# the user seed with numpy's SeedSequence spawn keys, so a new stage gets a new
# key and never shifts the draws of an existing one.
STAGE_KEYS = {"sample": 0, "layout": 1}


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(STAGE_KEYS[stage],))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class SynthesisConfig:
    grid_gap: float = 100.0
    lane_width: float = 3.5
    crosswalk_width: float = 4.5
    junction_radius: float = 12.0
    seed: int = 0
    strict_two_way: bool = True

    def __post_init__(self):
        for name in ("grid_gap", "lane_width", "crosswalk_width", "junction_radius"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive length, got {v}")
        if self.grid_gap <= 2 * self.junction_radius + self.crosswalk_width:
            raise ValueError("grid_gap must exceed 2*junction_radius + crosswalk_width")
        if self.junction_radius <= self.lane_width:
            raise ValueError("junction_radius must exceed lane_width")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def stub_length(self) -> float:
        return self.grid_gap / 2.0 - self.junction_radius

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthesisConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


# --- sampling ----------------------------------------------------------------


def _draw_rotation(ranges, n: int, rng: np.random.Generator) -> Tuple[float, ...]:
    lo = np.array([iv[0] for iv in ranges])
    hi = np.array([iv[1] for iv in ranges])
    fallback = None
    for k in range(CANONICAL_SEARCH):
        if k % MAX_RETRIES == 0:
            if k and fallback is None:
                break
            batch = rng.uniform(lo, hi, size=(MAX_RETRIES, n))
        raw = batch[k % MAX_RETRIES]
        try:
            unwrapped = unwrap_ccw(raw.tolist())
        except InvalidFeature:
            continue
        if n <= 4 and not _injective(unwrapped):
            continue
        if fallback is None:
            fallback = unwrapped
        # prefer the normalized form: re-extracting it from a built map is a no-op
        _, canon = normalize_rotation(rotation_gaps(unwrapped))
        if n <= 4 and not _injective(canon):
            continue
        if all(within_interval(a, l, h, RANGE_TOL) for a, (l, h) in zip(canon, ranges)):
            return tuple(canon)
    if fallback is None:
        raise UnsatisfiableRotation(
            f"no counter-clockwise rotation for n={n} within {MAX_RETRIES} draws"
        )
    log.info("n=%d: intervals hold no normalized rotation; keeping a raw draw", n)
    return tuple(fallback)


def _injective(f_rot) -> bool:
    dirs = [cardinal_index(a) for a in f_rot]
    return len(set(dirs)) == len(dirs)


def sample_junction_features(feature: MapFeature, seed: int) -> List[JunctionFeature]:
    """One concrete junction feature per (road count, control, crosswalk) cell,
    with each socket angle drawn uniformly from its extracted interval."""
    rng = stage_rng(seed, "sample")
    out = []
    for n, ctrl, xwlk in feature.cells():
        f_rot = _draw_rotation(feature.rot_ranges[n], n, rng)
        out.append(JunctionFeature(n, f_rot, ctrl, xwlk))
    return out


# --- grid layout ---------------------------------------------------------------


@dataclass
class GridLayout:
    assignments: Dict[GridPoint, JunctionFeature] = field(default_factory=dict)
    labels: Dict[GridPoint, str] = field(default_factory=dict)
    empty_points: set = field(default_factory=lambda: {(0, 0)})

    @property
    def filled_points(self) -> set:
        return set(self.assignments)

    def assign(self, point: GridPoint, feature: JunctionFeature, label: str) -> None:
        self.empty_points.discard(point)
        self.assignments[point] = feature
        self.labels[point] = label
        x, y = point
        for dx, dy in DIRECTIONS:
            nb = (x + dx, y + dy)
            if nb not in self.empty_points and nb not in self.assignments:
                self.empty_points.add(nb)


def socket_directions(feature: JunctionFeature) -> List[int]:
    """Cardinal direction of every socket; must be one-to-one."""
    dirs = feature.cardinal_directions()
    if len(set(dirs)) != len(dirs):
        raise SocketConflict(
            f"sockets at {[round(math.degrees(a), 2) for a in feature.f_rot]} deg share a cardinal direction"
        )
    return dirs


def _score(layout: GridLayout, point: GridPoint, feature: JunctionFeature, dirs: List[int]):
    usable = []
    facing = 0
    for m, (dx, dy) in enumerate(DIRECTIONS):
        nb = (point[0] + dx, point[1] + dy)
        other = layout.assignments.get(nb)
        if other is None:
            usable.append(True)
            continue
        ok = (m + 2) % 4 in other.cardinal_directions()
        usable.append(ok)
        if ok and m in dirs:
            facing += 1
    if feature.f_road > sum(usable):
        return None
    return sum(1 for m in dirs if usable[m]), facing


def best_match_grid_point(layout: GridLayout, feature: JunctionFeature, rng: np.random.Generator) -> GridPoint:
    """Empty grid point where ``feature`` connects the most roads.

    Points are ranked by the number of the junction's sockets that can reach
    a free or facing neighbour, then by how many filled neighbours they
    actually connect to; remaining draws are broken at random.
    """
    if not layout.empty_points:
        raise NoFeasiblePoint("no empty grid points")
    if feature.f_road > 4:
        raise NoFeasiblePoint(f"{feature.f_road}-legged junction cannot sit on a 4-neighbour grid")
    dirs = socket_directions(feature)
    scored = []
    for p in sorted(layout.empty_points):
        s = _score(layout, p, feature, dirs)
        if s is not None:
            scored.append((s, p))
    if not scored:
        raise NoFeasiblePoint(f"no grid point accepts a {feature.f_road}-legged junction")
    top = max(s for s, _ in scored)
    best = [p for s, p in scored if s == top]
    return best[int(rng.integers(len(best)))] if len(best) > 1 else best[0]


def placement_order(features: Sequence[JunctionFeature]) -> List[int]:
    return sorted(range(len(features)), key=lambda i: (-features[i].f_road, i))


def layout_junctions(
    features: Sequence[JunctionFeature], config: SynthesisConfig, rng: Optional[np.random.Generator] = None
) -> GridLayout:
    rng = rng if rng is not None else stage_rng(config.seed, "layout")
    layout = GridLayout()
    if not features:
        layout.empty_points = set()
        return layout
    for i in placement_order(features):
        point = best_match_grid_point(layout, features[i], rng)
        layout.assign(point, features[i], f"J{i}")
    return layout


# --- instantiation -----------------------------------------------------------


def instantiate_junction(
    feature: JunctionFeature, center: Point2, config: SynthesisConfig, junction_id: str = "J0"
) -> Junction:
    """Junction with one socket per rotation angle; road ids are filled in by
    :func:`build_roads`."""
    r = config.junction_radius
    sockets = [
        RoadSocket("", center + Point2.polar(r, a), normalize_angle(a)) for a in feature.f_rot
    ]
    return Junction(
        id=junction_id,
        center=center,
        radius=r,
        sockets=sockets,
        control=feature.f_ctrl,
        has_crosswalks=feature.f_xwlk,
    )


def _road_type(forward: bool, backward: bool) -> SocketType:
    if forward and backward:
        return SocketType.IN_OUT
    if forward:
        return SocketType.OUT
    if backward:
        return SocketType.IN
    raise SocketConflict("one-way sockets face each other with no legal travel direction")


def build_roads(
    layout: GridLayout,
    junctions: Dict[GridPoint, Junction],
    config: SynthesisConfig,
    grid: bool = True,
) -> List[Road]:
    """Connect facing sockets of neighbouring junctions; stub the rest.

    Fills in ``road_id`` on every junction socket. With ``grid`` every
    junction's sockets must map one-to-one onto cardinal directions.
    """
    if grid:
        for f in layout.assignments.values():
            socket_directions(f)
    roads: List[Road] = []
    used: Dict[Tuple[str, int], str] = {}

    def new_id():
        return f"R{len(roads)}"

    for p in sorted(layout.assignments):
        a_feat = layout.assignments[p]
        for m in (0, 1):  # East and North; West/South are covered from the other side
            q = (p[0] + DIRECTIONS[m][0], p[1] + DIRECTIONS[m][1])
            if q not in layout.assignments:
                continue
            b_feat = layout.assignments[q]
            a_dirs, b_dirs = socket_directions(a_feat), socket_directions(b_feat)
            if m not in a_dirs or (m + 2) % 4 not in b_dirs:
                continue
            ia, ib = a_dirs.index(m), b_dirs.index((m + 2) % 4)
            ja, jb = junctions[p], junctions[q]
            sa, sb = ja.sockets[ia], jb.sockets[ib]
            ta, tb = a_feat.socket_types[ia], b_feat.socket_types[ib]
            rid = new_id()
            roads.append(
                Road(
                    id=rid,
                    reference=bezier_from_endpoints(sa.endpoint, sa.angle, sb.endpoint, sb.angle + math.pi),
                    socket_type=_road_type(
                        ta.has_outgoing and tb.has_incoming, ta.has_incoming and tb.has_outgoing
                    ),
                    start_junction=ja.id,
                    end_junction=jb.id,
                )
            )
            used[(ja.id, ia)] = rid
            used[(jb.id, ib)] = rid

    for p in sorted(layout.assignments, key=lambda p: _natural(junctions[p].id)):
        j = junctions[p]
        feat = layout.assignments[p]
        for i, s in enumerate(j.sockets):
            if (j.id, i) in used:
                continue
            rid = new_id()
            tip = s.endpoint + Point2.polar(config.stub_length, s.angle)
            roads.append(
                Road(
                    id=rid,
                    reference=bezier_from_endpoints(s.endpoint, s.angle, tip, s.angle),
                    socket_type=feat.socket_types[i],
                    start_junction=j.id,
                )
            )
            used[(j.id, i)] = rid

    for p, j in junctions.items():
        j.sockets = [dataclasses.replace(s, road_id=used[(j.id, i)]) for i, s in enumerate(j.sockets)]
    return roads


def _natural(ident: str):
    head = ident.rstrip("0123456789")
    tail = ident[len(head):]
    return (head, int(tail) if tail else -1)


def _lane_stem(road_id: str) -> str:
    return "L" + road_id[1:] if road_id.startswith("R") else f"{road_id}_L"


def build_lanes(road: Road, config: SynthesisConfig) -> Tuple[Optional[Lane], Optional[Lane]]:
    """Forward and backward lanes offset half a lane width to the right of travel.

    Sets the lane ids on ``road``.
    """
    ref = road.reference
    h0, h1 = bezier_heading(ref, 0.0), bezier_heading(ref, 1.0)
    half = config.lane_width / 2.0
    stem = _lane_stem(road.id)
    forward = backward = None
    if road.socket_type.has_outgoing:
        forward = Lane(
            id=f"{stem}_f",
            kind=LaneKind.ROAD,
            reference=bezier_from_endpoints(
                perpendicular_offset(ref.p0, h0, half), h0, perpendicular_offset(ref.p3, h1, half), h1
            ),
            width=config.lane_width,
            road_id=road.id,
        )
        road.forward_lane = forward.id
    if road.socket_type.has_incoming:
        b0, b1 = h1 + math.pi, h0 + math.pi
        backward = Lane(
            id=f"{stem}_b",
            kind=LaneKind.ROAD,
            reference=bezier_from_endpoints(
                perpendicular_offset(ref.p3, b0, half), b0, perpendicular_offset(ref.p0, b1, half), b1
            ),
            width=config.lane_width,
            road_id=road.id,
        )
        road.backward_lane = backward.id
    return forward, backward


def build_junction_lanes(
    junction: Junction, roads: Dict[str, Road], lanes: Dict[str, Lane], config: SynthesisConfig
) -> List[Lane]:
    """One junction lane per (incoming lane, outgoing lane of another road)."""
    out = []
    incident = [roads[s.road_id] for s in junction.sockets]
    for a in incident:
        a_in, _ = a.lanes_at(junction.id)
        if a_in is None:
            continue
        src = lanes[a_in]
        for b in incident:
            _, b_out = b.lanes_at(junction.id)
            if b is a or b_out is None:
                continue
            dst = lanes[b_out]
            lane = Lane(
                id=f"{junction.id}_L{len(out)}",
                kind=LaneKind.JUNCTION,
                reference=bezier_from_endpoints(
                    src.reference.p3,
                    bezier_heading(src.reference, 1.0),
                    dst.reference.p0,
                    bezier_heading(dst.reference, 0.0),
                ),
                width=config.lane_width,
                predecessors=[src.id],
                successors=[dst.id],
                junction_id=junction.id,
            )
            src.successors.append(lane.id)
            dst.predecessors.append(lane.id)
            out.append(lane)
    junction.junction_lane_ids = [l.id for l in out]
    return out


def _incoming(junction: Junction, roads: Dict[str, Road], lanes: Dict[str, Lane]):
    for s in junction.sockets:
        road = roads[s.road_id]
        lid, _ = road.lanes_at(junction.id)
        if lid is not None:
            yield road, lanes[lid]


def place_controls(
    junction: Junction, roads: Dict[str, Road], lanes: Dict[str, Lane], config: SynthesisConfig
) -> List[TrafficControlDevice]:
    if junction.control is Control.BARE:
        return []
    out = []
    for k, (road, lane) in enumerate(_incoming(junction, roads, lanes)):
        tip = lane.reference.p3
        heading = bezier_heading(lane.reference, 1.0)
        facing = normalize_angle(heading + math.pi)
        if junction.control is Control.SIGNAL:
            # across the junction, looking back at the stop line
            pos = tip + Point2.polar(2.0 * junction.radius, heading)
            kind, tag = DeviceKind.SIGNAL, "sig"
        else:
            pos = perpendicular_offset(tip, heading, config.lane_width)
            kind, tag = DeviceKind.STOP_SIGN, "stop"
        out.append(TrafficControlDevice(f"{junction.id}_{tag}{k}", kind, junction.id, road.id, lane.id, pos, facing))
    return out


def place_crosswalks(
    junction: Junction, roads: Dict[str, Road], config: SynthesisConfig
) -> List[Crosswalk]:
    """A crosswalk across every connected road, inside the junction disc."""
    if not junction.has_crosswalks:
        return []
    w = config.lane_width
    out = []
    for k, s in enumerate(junction.sockets):
        incoming, outgoing = roads[s.road_id].lanes_at(junction.id)
        # across-road extent, left of the outward direction is positive
        s_lo = -w if outgoing is not None else 0.0
        s_hi = w if incoming is not None else 0.0
        reach = max(abs(s_lo), abs(s_hi))
        u_hi = math.sqrt(junction.radius**2 - reach**2) - CROSSWALK_MARGIN
        u_lo = u_hi - config.crosswalk_width
        e = Point2.polar(1.0, s.angle)
        n = Point2(-e.y, e.x)
        c = junction.center
        corners = tuple(c + e * u + n * v for u, v in ((u_lo, s_lo), (u_hi, s_lo), (u_hi, s_hi), (u_lo, s_hi)))
        out.append(Crosswalk(f"{junction.id}_X{k}", junction.id, s.road_id, corners, config.crosswalk_width))
    return out


# --- end to end ----------------------------------------------------------------


def _assemble(layout: GridLayout, config: SynthesisConfig, grid: bool = True) -> MapDoc:
    junctions = {
        p: instantiate_junction(f, Point2(p[0] * config.grid_gap, p[1] * config.grid_gap), config, layout.labels[p])
        for p, f in layout.assignments.items()
    }
    roads = build_roads(layout, junctions, config, grid)
    doc = MapDoc()
    for j in sorted(junctions.values(), key=lambda j: _natural(j.id)):
        doc.junctions[j.id] = j
    for road in roads:
        doc.roads[road.id] = road
        for lane in build_lanes(road, config):
            if lane is not None:
                doc.lanes[lane.id] = lane
    for j in doc.junctions.values():
        for lane in build_junction_lanes(j, doc.roads, doc.lanes, config):
            doc.lanes[lane.id] = lane
    for j in doc.junctions.values():
        for dev in place_controls(j, doc.roads, doc.lanes, config):
            doc.controls[dev.id] = dev
        for cw in place_crosswalks(j, doc.roads, config):
            doc.crosswalks[cw.id] = cw
    return doc


def generate_map(
    source: Union[MapFeature, Sequence[JunctionFeature]], config: SynthesisConfig, name: str = "feat2map"
) -> MapDoc:
    """Build a complete map from a map feature (sampled) or explicit junction features.

    A single explicit junction skips the grid layout, which lets junctions
    with more than four legs be generated on their own.
    """
    if isinstance(source, MapFeature):
        features = sample_junction_features(source, config.seed)
        explicit = False
    else:
        features = list(source)
        explicit = True
        if config.strict_two_way and any(
            t is not SocketType.IN_OUT for f in features for t in f.socket_types
        ):
            raise InvalidFeature("one-way socket types need strict_two_way=False")
    if explicit and len(features) == 1:
        layout = GridLayout()
        layout.assign((0, 0), features[0], "J0")
        doc = _assemble(layout, config, grid=False)
    else:
        layout = layout_junctions(features, config)
        doc = _assemble(layout, config)
    doc.metadata = {
        "name": name,
        "generator": "feat2map",
        "seed": int(config.seed),
        "config": config.to_dict(),
        "grid": {layout.labels[p]: [p[0], p[1]] for p in sorted(layout.assignments)},
    }
    doc.issues = validate_map(doc)
    if doc.issues:
        log.warning("generated map has %d validation issue(s)", len(doc.issues))
    return doc


# --- road chains -----------------------------------------------------------------


@dataclass(frozen=True)
class RoadSegment:
    start: Point2
    start_heading: float
    end: Point2
    end_heading: float
    socket_type: SocketType = SocketType.IN_OUT


@dataclass(frozen=True)
class RoadChainSpec:
    segments: Tuple[RoadSegment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ChainDiscontinuity("a road chain needs at least one segment")


JOINT_TOL = 1e-6


def _joint_ok(a: RoadSegment, b: RoadSegment) -> bool:
    return a.end.dist(b.start) <= JOINT_TOL and abs(angle_diff(a.end_heading, b.start_heading)) <= JOINT_TOL


def build_road_chain(spec: RoadChainSpec, config: SynthesisConfig, prefix: str = "C") -> MapDoc:
    """Roads connected end to end; closes into a loop when the last segment
    ends where the first begins."""
    segs = spec.segments
    for i in range(len(segs) - 1):
        if not _joint_ok(segs[i], segs[i + 1]):
            raise ChainDiscontinuity(f"segment {i} does not meet segment {i + 1}")
    closed = len(segs) > 1 and _joint_ok(segs[-1], segs[0])
    doc = MapDoc(metadata={"name": f"{prefix}-chain", "generator": "feat2map", "closed": closed})
    built = []
    for i, seg in enumerate(segs):
        road = Road(
            id=f"{prefix}R{i}",
            reference=bezier_from_endpoints(seg.start, seg.start_heading, seg.end, seg.end_heading),
            socket_type=SocketType(seg.socket_type),
        )
        fwd, bwd = build_lanes(road, config)
        doc.roads[road.id] = road
        for lane in (fwd, bwd):
            if lane is not None:
                doc.lanes[lane.id] = lane
        built.append((fwd, bwd))
    pairs = list(zip(built, built[1:]))
    if closed:
        pairs.append((built[-1], built[0]))
    for (f0, b0), (f1, b1) in pairs:
        if f0 is not None and f1 is not None:
            f0.successors.append(f1.id)
            f1.predecessors.append(f0.id)
        if b0 is not None and b1 is not None:
            b1.successors.append(b0.id)
            b0.predecessors.append(b1.id)
    doc.issues = validate_map(doc)
    return doc
