import math

import pytest

from feat2map.geometry import Point2, bezier_from_endpoints, perpendicular_offset
from feat2map.model import (
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
)
from feat2map.presets import merged_feature, city_feature
from feat2map.synthesis import SynthesisConfig

WIDTH = 3.5
RADIUS = 12.0


def _straight(a: Point2, b: Point2):
    h = (b - a).angle()
    return bezier_from_endpoints(a, h, b, h)


def build_two_junction_map(crosswalks_at_j0: bool = True) -> MapDoc:
    """Two junctions joined by one road: a 4-way signal at the origin and a
    T-shaped stop junction 100 m east. All coordinates are written out."""
    doc = MapDoc(metadata={"name": "two-junction"})
    doc.junctions["J0"] = Junction("J0", Point2(0, 0), RADIUS, [], Control.SIGNAL, crosswalks_at_j0, [])
    doc.junctions["J1"] = Junction("J1", Point2(100, 0), RADIUS, [], Control.STOP, False, [])
    # id, start, end, start junction, end junction
    spec = [
        ("R0", Point2(-12, 0), Point2(-50, 0), "J0", None),
        ("R1", Point2(0, 12), Point2(0, 50), "J0", None),
        ("R2", Point2(0, -12), Point2(0, -50), "J0", None),
        ("R3", Point2(12, 0), Point2(88, 0), "J0", "J1"),
        ("R4", Point2(100, 12), Point2(100, 50), "J1", None),
        ("R5", Point2(100, -12), Point2(100, -50), "J1", None),
    ]
    n = 0
    for rid, a, b, sj, ej in spec:
        h = (b - a).angle()
        fwd = Lane(f"L{n}", LaneKind.ROAD, _straight(perpendicular_offset(a, h, WIDTH / 2), perpendicular_offset(b, h, WIDTH / 2)), WIDTH, road_id=rid)
        bwd = Lane(f"L{n + 1}", LaneKind.ROAD, _straight(perpendicular_offset(b, h + math.pi, WIDTH / 2), perpendicular_offset(a, h + math.pi, WIDTH / 2)), WIDTH, road_id=rid)
        n += 2
        doc.lanes[fwd.id] = fwd
        doc.lanes[bwd.id] = bwd
        doc.roads[rid] = Road(rid, _straight(a, b), SocketType.IN_OUT, fwd.id, bwd.id, sj, ej)
        doc.junctions[sj].sockets.append(RoadSocket(rid, a, (a - doc.junctions[sj].center).angle()))
        if ej:
            doc.junctions[ej].sockets.append(RoadSocket(rid, b, (b - doc.junctions[ej].center).angle()))

    for jid in ("J0", "J1"):
        j = doc.junctions[jid]
        ends = []
        for s in j.sockets:
            road = doc.roads[s.road_id]
            if road.start_junction == jid:
                ends.append((road.id, road.backward_lane, road.forward_lane))
            else:
                ends.append((road.id, road.forward_lane, road.backward_lane))
        for rin, lin, _ in ends:
            for rout, _, lout in ends:
                if rin == rout:
                    continue
                a, b = doc.lanes[lin].reference, doc.lanes[lout].reference
                ha = (a.p3 - a.p2).angle()
                hb = (b.p1 - b.p0).angle()
                lane = Lane(f"L{n}", LaneKind.JUNCTION, bezier_from_endpoints(a.p3, ha, b.p0, hb), WIDTH, [lin], [lout], junction_id=jid)
                n += 1
                doc.lanes[lane.id] = lane
                doc.lanes[lin].successors.append(lane.id)
                doc.lanes[lout].predecessors.append(lane.id)
                j.junction_lane_ids.append(lane.id)
        for k, (rid, lin, _) in enumerate(ends):
            ref = doc.lanes[lin].reference
            h = (ref.p3 - ref.p2).angle()
            if j.control is Control.SIGNAL:
                pos, kind = ref.p3 + Point2.polar(2 * RADIUS, h), DeviceKind.SIGNAL
            else:
                pos, kind = perpendicular_offset(ref.p3, h, WIDTH), DeviceKind.STOP_SIGN
            dev = TrafficControlDevice(f"{jid}_D{k}", kind, jid, rid, lin, pos, h + math.pi)
            doc.controls[dev.id] = dev
        if j.has_crosswalks:
            u_hi = math.sqrt(RADIUS**2 - WIDTH**2) - 0.25
            for k, s in enumerate(j.sockets):
                e = Point2.polar(1, s.angle)
                nrm = Point2(-e.y, e.x)
                corners = tuple(
                    j.center + e * u + nrm * v
                    for u, v in ((u_hi - 4.5, -WIDTH), (u_hi, -WIDTH), (u_hi, WIDTH), (u_hi - 4.5, WIDTH))
                )
                doc.crosswalks[f"{jid}_X{k}"] = Crosswalk(f"{jid}_X{k}", jid, s.road_id, corners, 4.5)
    return doc


@pytest.fixture
def two_junction_map():
    return build_two_junction_map()


@pytest.fixture
def city():
    return city_feature()


@pytest.fixture
def merged():
    return merged_feature()


@pytest.fixture
def config():
    return SynthesisConfig(seed=42)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
