"""Mock planner: which scenario stage paths a map exercises.

Every junction lane is one route (entry road, junction, exit road). A small
state machine maps the junction's control, the turn and crosswalk presence
to the sequence of planner stages driven through it.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .errors import UnsupportedLightState
from .geometry import normalize_angle
from .model import Control, Junction, MapDoc, RoadSocket

StagePath = Tuple[str, ...]

STAGES = ("LF", "S_PS", "S_S", "S_C", "S_I", "T_A", "T_C", "L_A", "L_C", "L_I")

SCENARIO_OF_PREFIX = {
    "LF": "LaneFollow",
    "S": "StopSignUnprotected",
    "T": "TrafficLightProtected",
    "L": "TrafficLightUnprotectedLeftTurn",
}

ASSUMPTIONS = (
    "Only the Green light state is modeled.",
    "The left-turn creep stage L_C is taken to be triggered by crosswalk presence.",
    "Right turns on green follow the protected straight path T_A, T_C.",
)
NOT_COVERABLE = {
    "TrafficLightUnprotectedRightTurn": "entered only when turning right under a red light",
}

STRAIGHT_LIMIT = math.radians(45.0)
TURN_LIMIT = math.radians(135.0)


class Turn(str, enum.Enum):
    LEFT = "Left"
    RIGHT = "Right"
    STRAIGHT = "Straight"
    UTURN = "UTurn"


@dataclass(frozen=True, order=True)
class RouteTriple:
    junction_id: str
    entry_road: str
    exit_road: str
    turn: Turn
    lane_id: str = ""


def classify_turn(entry_angle: float, exit_angle: float) -> Turn:
    """Turn taken when entering through the socket at ``entry_angle`` and
    leaving through ``exit_angle``. Both are outward socket directions."""
    travel_in = entry_angle + math.pi
    delta = normalize_angle(exit_angle - travel_in)
    if abs(delta) <= STRAIGHT_LIMIT + 1e-12:
        return Turn.STRAIGHT
    if STRAIGHT_LIMIT < delta <= TURN_LIMIT + 1e-12:
        return Turn.LEFT
    if -TURN_LIMIT - 1e-12 <= delta < -STRAIGHT_LIMIT:
        return Turn.RIGHT
    return Turn.UTURN


def plan_stage_path(control, turn, has_crosswalk: bool, light_state: str = "Green") -> StagePath:
    if light_state != "Green":
        raise UnsupportedLightState(f"light state {light_state!r} is not modeled")
    control, turn = Control(control), Turn(turn)
    if control is Control.BARE:
        return ("LF",)
    if control is Control.STOP:
        return ("LF", "S_PS", "S_S", "S_C", "S_I", "LF")
    if turn in (Turn.STRAIGHT, Turn.RIGHT):
        return ("LF", "T_A", "T_C", "LF")
    if has_crosswalk:
        return ("LF", "L_A", "L_C", "L_I", "LF")
    return ("LF", "L_A", "L_I", "LF")


def scenario_of(stage: str) -> str:
    return SCENARIO_OF_PREFIX[stage.split("_")[0]]


def scenarios_of(paths) -> List[str]:
    return sorted({scenario_of(s) for p in paths for s in p})


def _natural(ident: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", ident)]


def _socket_near(junction: Junction, road_id: str, point) -> RoadSocket:
    candidates = [s for s in junction.sockets if s.road_id == road_id]
    return min(candidates, key=lambda s: s.endpoint.dist(point))


def enumerate_routes(doc: MapDoc) -> List[RouteTriple]:
    routes = []
    for jid in sorted(doc.junctions, key=_natural):
        junction = doc.junctions[jid]
        for lid in junction.junction_lane_ids:
            lane = doc.lanes[lid]
            if not lane.predecessors or not lane.successors:
                continue
            entry = doc.lanes[lane.predecessors[0]].road_id
            exit_ = doc.lanes[lane.successors[0]].road_id
            s_in = _socket_near(junction, entry, lane.reference.start)
            s_out = _socket_near(junction, exit_, lane.reference.end)
            routes.append(RouteTriple(jid, entry, exit_, classify_turn(s_in.angle, s_out.angle), lid))
    return routes


@dataclass
class CoverageReport:
    paths: List[StagePath] = field(default_factory=list)
    scenarios: List[str] = field(default_factory=list)
    # junction id -> list of (entry road, exit road, turn, path)
    log: Dict[str, List[Tuple[str, str, str, StagePath]]] = field(default_factory=dict)
    assumptions: Tuple[str, ...] = ASSUMPTIONS
    not_coverable: Dict[str, str] = field(default_factory=lambda: dict(NOT_COVERABLE))

    @property
    def path_count(self) -> int:
        return len(self.paths)

    def path_set(self) -> set:
        return set(self.paths)

    def to_dict(self) -> dict:
        return {
            "schema_version": "feat2map-coverage/1",
            "assumptions": list(self.assumptions),
            "light_state": "Green",
            "path_count": self.path_count,
            "paths": [list(p) for p in self.paths],
            "scenarios": list(self.scenarios),
            "not_coverable": dict(self.not_coverable),
            "junctions": {
                jid: [
                    {"entry_road": e, "exit_road": x, "turn": t, "path": list(p)}
                    for e, x, t, p in entries
                ]
                for jid, entries in self.log.items()
            },
        }

    def table(self) -> str:
        lines = [f"# {a}" for a in self.assumptions]
        lines.append(f"{'#':>2}  {'scenario(s)':<34} path")
        for i, p in enumerate(self.paths, 1):
            names = ", ".join(s for s in scenarios_of([p]) if s != "LaneFollow") or "LaneFollow"
            lines.append(f"{i:>2}  {names:<34} {' -> '.join(p)}")
        lines.append(f"distinct paths: {self.path_count}")
        for name, why in sorted(self.not_coverable.items()):
            lines.append(f"not coverable: {name} ({why})")
        return "\n".join(lines) + "\n"


def _path_key(p: StagePath):
    return (len(p), [STAGES.index(s) for s in p])


def coverage_report(doc: MapDoc, routes: Sequence[RouteTriple] = None) -> CoverageReport:
    routes = enumerate_routes(doc) if routes is None else routes
    log: Dict[str, list] = {}
    covered = set()
    for r in routes:
        j = doc.junctions[r.junction_id]
        path = plan_stage_path(j.control, r.turn, j.has_crosswalks)
        covered.add(path)
        log.setdefault(r.junction_id, []).append((r.entry_road, r.exit_road, r.turn.value, path))
    paths = sorted(covered, key=_path_key)
    return CoverageReport(paths=paths, scenarios=scenarios_of(paths), log=log)
