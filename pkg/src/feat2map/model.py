"""In-memory HD map model and structural validation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Tuple

from shapely.geometry import LineString, Polygon

from .errors import UnknownJunction
from .geometry import (
    ANGLE_TOL,
    CubicBezier,
    Point2,
    angle_diff,
    bezier_heading,
    perpendicular_offset,
    sample_bezier,
)

POS_TOL = 1e-6


class LaneKind(str, enum.Enum):
    ROAD = "road"
    JUNCTION = "junction"


class SocketType(str, enum.Enum):
    """Directionality of a road relative to the junction (or road start) it leaves."""

    IN_OUT = "InOut"
    IN = "In"
    OUT = "Out"

    @property
    def has_incoming(self) -> bool:
        return self is not SocketType.OUT

    @property
    def has_outgoing(self) -> bool:
        return self is not SocketType.IN


class Control(str, enum.Enum):
    BARE = "bare"
    SIGNAL = "signal"
    STOP = "stop"


class DeviceKind(str, enum.Enum):
    SIGNAL = "signal"
    STOP_SIGN = "stop_sign"


@dataclass
class Lane:
    id: str
    kind: LaneKind
    reference: CubicBezier
    width: float
    predecessors: List[str] = field(default_factory=list)
    successors: List[str] = field(default_factory=list)
    road_id: Optional[str] = None
    junction_id: Optional[str] = None


@dataclass
class Road:
    """A road segment. ``socket_type`` is relative to the road's start:
    ``Out`` keeps only the forward lane, ``In`` only the backward lane."""

    id: str
    reference: CubicBezier
    socket_type: SocketType = SocketType.IN_OUT
    forward_lane: Optional[str] = None
    backward_lane: Optional[str] = None
    start_junction: Optional[str] = None  # None marks a dead end
    end_junction: Optional[str] = None

    def lanes_at(self, junction_id: str) -> Tuple[Optional[str], Optional[str]]:
        """(incoming lane id, outgoing lane id) of this road at ``junction_id``."""
        if self.start_junction == junction_id:
            return self.backward_lane, self.forward_lane
        if self.end_junction == junction_id:
            return self.forward_lane, self.backward_lane
        return None, None

    def endpoint_at(self, junction_id: str) -> Point2:
        if self.start_junction == junction_id:
            return self.reference.p0
        return self.reference.p3


@dataclass(frozen=True)
class RoadSocket:
    road_id: str
    endpoint: Point2
    angle: float


@dataclass
class Junction:
    id: str
    center: Point2
    radius: float
    sockets: List[RoadSocket]
    control: Control = Control.BARE
    has_crosswalks: bool = False
    junction_lane_ids: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class TrafficControlDevice:
    id: str
    kind: DeviceKind
    junction_id: str
    road_id: str
    lane_id: str
    position: Point2
    facing: float


@dataclass(frozen=True)
class Crosswalk:
    id: str
    junction_id: str
    road_id: str
    polygon: Tuple[Point2, Point2, Point2, Point2]
    width: float


@dataclass
class MapDoc:
    roads: Dict[str, Road] = field(default_factory=dict)
    lanes: Dict[str, Lane] = field(default_factory=dict)
    junctions: Dict[str, Junction] = field(default_factory=dict)
    controls: Dict[str, TrafficControlDevice] = field(default_factory=dict)
    crosswalks: Dict[str, Crosswalk] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    # attached by the parser; never serialized
    issues: list = field(default_factory=list, compare=False, repr=False)

    def merge(self, other: "MapDoc") -> "MapDoc":
        """Union of two maps with disjoint ids."""
        out = MapDoc(
            roads={**self.roads, **other.roads},
            lanes={**self.lanes, **other.lanes},
            junctions={**self.junctions, **other.junctions},
            controls={**self.controls, **other.controls},
            crosswalks={**self.crosswalks, **other.crosswalks},
            metadata=dict(self.metadata),
        )
        return out


def junction_degree(doc: MapDoc, junction_id: str) -> int:
    try:
        return len(doc.junctions[junction_id].sockets)
    except KeyError:
        raise UnknownJunction(junction_id) from None


def incident_roads(doc: MapDoc, junction_id: str) -> List[Road]:
    if junction_id not in doc.junctions:
        raise UnknownJunction(junction_id)
    return [doc.roads[s.road_id] for s in doc.junctions[junction_id].sockets if s.road_id in doc.roads]


@dataclass(frozen=True)
class Violation:
    code: str
    ids: Tuple[str, ...]
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {', '.join(self.ids)}: {self.message}"


def expected_lane_endpoints(road: Road, width: float):
    """Endpoints (start, end) of the forward and backward lanes of ``road``."""
    ref = road.reference
    h0 = bezier_heading(ref, 0.0)
    h1 = bezier_heading(ref, 1.0)
    half = width / 2.0
    forward = (perpendicular_offset(ref.p0, h0, half), perpendicular_offset(ref.p3, h1, half))
    backward = (
        perpendicular_offset(ref.p3, h1 + math.pi, half),
        perpendicular_offset(ref.p0, h0 + math.pi, half),
    )
    return forward, backward


def lane_line(lane: Lane) -> LineString:
    return LineString(sample_bezier(lane.reference))


def validate_map(doc: MapDoc) -> List[Violation]:
    """Every invariant violation in ``doc``. An empty list means valid."""
    out: List[Violation] = []

    def bad(code, ids, msg):
        out.append(Violation(code, tuple(ids), msg))

    _check_references(doc, bad)
    if out:
        # geometric checks assume references resolve
        return out
    _check_lanes(doc, bad)
    _check_roads(doc, bad)
    _check_junctions(doc, bad)
    _check_connectivity(doc, bad)
    _check_controls(doc, bad)
    _check_crosswalks(doc, bad)
    return out


def _check_references(doc, bad):
    for lane in doc.lanes.values():
        for ref in lane.predecessors + lane.successors:
            if ref not in doc.lanes:
                bad("unresolved", [lane.id, ref], "lane link points to a missing lane")
        if lane.road_id is not None and lane.road_id not in doc.roads:
            bad("unresolved", [lane.id, lane.road_id], "lane references a missing road")
        if lane.junction_id is not None and lane.junction_id not in doc.junctions:
            bad("unresolved", [lane.id, lane.junction_id], "lane references a missing junction")
    for road in doc.roads.values():
        for lid in (road.forward_lane, road.backward_lane):
            if lid is not None and lid not in doc.lanes:
                bad("unresolved", [road.id, lid], "road references a missing lane")
        for jid in (road.start_junction, road.end_junction):
            if jid is not None and jid not in doc.junctions:
                bad("unresolved", [road.id, jid], "road references a missing junction")
    for j in doc.junctions.values():
        for s in j.sockets:
            if s.road_id not in doc.roads:
                bad("unresolved", [j.id, s.road_id], "socket references a missing road")
        for lid in j.junction_lane_ids:
            if lid not in doc.lanes:
                bad("unresolved", [j.id, lid], "junction references a missing lane")
    for dev in doc.controls.values():
        for ref, pool in ((dev.junction_id, doc.junctions), (dev.road_id, doc.roads), (dev.lane_id, doc.lanes)):
            if ref not in pool:
                bad("unresolved", [dev.id, ref], "control device references a missing element")
    for cw in doc.crosswalks.values():
        for ref, pool in ((cw.junction_id, doc.junctions), (cw.road_id, doc.roads)):
            if ref not in pool:
                bad("unresolved", [cw.id, ref], "crosswalk references a missing element")


def _lane_end_junction(doc: MapDoc, lane: Lane) -> Optional[str]:
    road = doc.roads[lane.road_id]
    return road.end_junction if lane.id == road.forward_lane else road.start_junction


def _lane_start_junction(doc: MapDoc, lane: Lane) -> Optional[str]:
    road = doc.roads[lane.road_id]
    return road.start_junction if lane.id == road.forward_lane else road.end_junction


def _check_lanes(doc, bad):
    for lane in doc.lanes.values():
        if not lane.width > 0:
            bad("lane-width", [lane.id], f"width {lane.width} must be positive")
        if lane.kind is LaneKind.JUNCTION:
            if lane.junction_id is None:
                bad("lane-adjacency", [lane.id], "junction lane without a junction")
            if len(lane.predecessors) != 1 or len(lane.successors) != 1:
                bad("lane-adjacency", [lane.id], "junction lane needs exactly one predecessor and successor")
            for ref in lane.predecessors + lane.successors:
                if doc.lanes[ref].kind is not LaneKind.ROAD:
                    bad("lane-adjacency", [lane.id, ref], "junction lane linked to a non-road lane")
        else:
            if lane.road_id is None:
                bad("lane-adjacency", [lane.id], "road lane without a road")
                continue
            end_j = _lane_end_junction(doc, lane)
            start_j = _lane_start_junction(doc, lane)
            for ref, side in [(r, end_j) for r in lane.successors] + [(r, start_j) for r in lane.predecessors]:
                other = doc.lanes[ref]
                if side is not None and (other.kind is not LaneKind.JUNCTION or other.junction_id != side):
                    bad("lane-adjacency", [lane.id, ref], "road lane must meet a junction lane at a junction")
                if side is None and other.kind is not LaneKind.ROAD:
                    bad("lane-adjacency", [lane.id, ref], "road lane meets a junction lane away from any junction")


def _check_roads(doc, bad):
    for road in doc.roads.values():
        st = road.socket_type
        has_f, has_b = road.forward_lane is not None, road.backward_lane is not None
        if (has_f, has_b) != (st.has_outgoing, st.has_incoming):
            bad("road-lanes", [road.id], f"socket type {st.value} inconsistent with lanes present")
        forward, backward = expected_lane_endpoints(road, _road_lane_width(doc, road))
        for lid, (a, b) in ((road.forward_lane, forward), (road.backward_lane, backward)):
            if lid is None:
                continue
            lane = doc.lanes[lid]
            if lane.road_id != road.id or lane.kind is not LaneKind.ROAD:
                bad("road-lanes", [road.id, lid], "lane does not belong to road")
            if lane.reference.p0.dist(a) > POS_TOL or lane.reference.p3.dist(b) > POS_TOL:
                bad("lane-offset", [road.id, lid], "lane endpoints are not the perpendicular offsets of the road")
        if has_f and has_b:
            fwd = doc.lanes[road.forward_lane].reference
            bwd = doc.lanes[road.backward_lane].reference
            if abs(angle_diff(bezier_heading(fwd, 0.0), bezier_heading(bwd, 1.0) + math.pi)) > ANGLE_TOL:
                bad("lane-direction", [road.id], "forward and backward lanes are not opposed")


def _road_lane_width(doc, road):
    lid = road.forward_lane or road.backward_lane
    return doc.lanes[lid].width if lid else 0.0


def _check_junctions(doc, bad):
    for j in doc.junctions.values():
        if len(j.sockets) < 3:
            bad("junction-degree", [j.id], f"{len(j.sockets)} sockets, need at least 3")
        if not isinstance(j.control, Control):
            bad("junction-control", [j.id], f"unknown control {j.control!r}")
        for s in j.sockets:
            if abs(s.endpoint.dist(j.center) - j.radius) > POS_TOL:
                bad("socket-radius", [j.id, s.road_id], "socket endpoint not on the junction radius")
            if abs(angle_diff(s.angle, (s.endpoint - j.center).angle())) > ANGLE_TOL:
                bad("socket-angle", [j.id, s.road_id], "socket angle disagrees with its endpoint")
            road = doc.roads[s.road_id]
            if j.id not in (road.start_junction, road.end_junction):
                bad("socket-road", [j.id, road.id], "road does not end at this junction")
            elif road.endpoint_at(j.id).dist(s.endpoint) > POS_TOL:
                bad("socket-road", [j.id, road.id], "road endpoint differs from socket endpoint")
    for a, b in combinations(sorted(doc.junctions.values(), key=lambda j: j.id), 2):
        if a.center.dist(b.center) < a.radius + b.radius:
            bad("junction-overlap", [a.id, b.id], "junction discs overlap")


def _check_connectivity(doc, bad):
    for j in doc.junctions.values():
        links = set()
        for lid in j.junction_lane_ids:
            lane = doc.lanes[lid]
            if lane.junction_id != j.id:
                bad("lane-adjacency", [j.id, lid], "junction lane owned by another junction")
            for p in lane.predecessors:
                for s in lane.successors:
                    links.add((doc.lanes[p].road_id, doc.lanes[s].road_id))
        roads = [doc.roads[s.road_id] for s in j.sockets]
        for a in roads:
            a_in, _ = a.lanes_at(j.id)
            if a_in is None:
                continue
            for b in roads:
                _, b_out = b.lanes_at(j.id)
                if b is a or b_out is None:
                    continue
                if (a.id, b.id) not in links:
                    bad("connectivity", [j.id, a.id, b.id], "no junction lane connects this road pair")


def incoming_approaches(doc: MapDoc, junction: Junction) -> List[Tuple[Road, Lane]]:
    out = []
    for s in junction.sockets:
        road = doc.roads[s.road_id]
        lid, _ = road.lanes_at(junction.id)
        if lid is not None:
            out.append((road, doc.lanes[lid]))
    return out


def _check_controls(doc, bad):
    by_junction: Dict[str, List[TrafficControlDevice]] = {}
    for dev in doc.controls.values():
        by_junction.setdefault(dev.junction_id, []).append(dev)
    for j in doc.junctions.values():
        devices = by_junction.get(j.id, [])
        approaches = incoming_approaches(doc, j)
        if j.control is Control.BARE:
            if devices:
                bad("controls", [j.id], "bare junction carries control devices")
            continue
        want = DeviceKind.SIGNAL if j.control is Control.SIGNAL else DeviceKind.STOP_SIGN
        if any(d.kind is not want for d in devices):
            bad("controls", [j.id], f"{j.control.value} junction carries a foreign device")
        if sorted(d.road_id for d in devices) != sorted(r.id for r, _ in approaches):
            bad("controls", [j.id], "control devices do not match incoming approaches one-to-one")
        for dev in devices:
            lane = doc.lanes[dev.lane_id]
            tip = lane.reference.p3
            heading = bezier_heading(lane.reference, 1.0)
            if abs(angle_diff(dev.facing, heading + math.pi)) > ANGLE_TOL:
                bad("controls", [dev.id], "device does not face the incoming traffic")
            rel = dev.position - tip
            along = rel.x * math.cos(heading) + rel.y * math.sin(heading)
            side = rel.x * math.sin(heading) - rel.y * math.cos(heading)  # positive to the right
            if dev.kind is DeviceKind.SIGNAL and (along <= 0 or abs(side) > POS_TOL):
                bad("controls", [dev.id], "signal is not on the extension of its lane")
            if dev.kind is DeviceKind.STOP_SIGN and (abs(along) > POS_TOL or side <= 0):
                bad("controls", [dev.id], "stop sign is not to the right of its lane")


def _check_crosswalks(doc, bad):
    by_junction: Dict[str, List[Crosswalk]] = {}
    for cw in doc.crosswalks.values():
        by_junction.setdefault(cw.junction_id, []).append(cw)
    road_lines = [(l.id, lane_line(l)) for l in doc.lanes.values() if l.kind is LaneKind.ROAD]
    for j in doc.junctions.values():
        walks = by_junction.get(j.id, [])
        if not j.has_crosswalks:
            if walks:
                bad("crosswalks", [j.id], "junction without crosswalk flag carries crosswalks")
            continue
        if sorted(c.road_id for c in walks) != sorted(s.road_id for s in j.sockets):
            bad("crosswalks", [j.id], "expected one crosswalk per connected road")
        jlines = [lane_line(doc.lanes[lid]) for lid in j.junction_lane_ids]
        for cw in walks:
            if any(p.dist(j.center) > j.radius + POS_TOL for p in cw.polygon):
                bad("crosswalks", [cw.id], "crosswalk extends beyond the junction radius")
            sides = [cw.polygon[i].dist(cw.polygon[(i + 1) % 4]) for i in range(4)]
            if min(abs(s - cw.width) for s in sides) > POS_TOL:
                bad("crosswalks", [cw.id], f"no polygon side matches width {cw.width}")
            poly = Polygon([p.as_tuple() for p in cw.polygon])
            if not any(poly.intersects(line) for line in jlines):
                bad("crosswalks", [cw.id], "crosswalk crosses no junction lane")
            hits = [lid for lid, line in road_lines if poly.intersects(line)]
            if hits:
                bad("crosswalks", [cw.id, *hits], "crosswalk overlaps road lanes")
