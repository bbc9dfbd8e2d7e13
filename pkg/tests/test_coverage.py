import math

import pytest

from feat2map.coverage import (
    Turn,
    classify_turn,
    coverage_report,
    enumerate_routes,
    plan_stage_path,
)
from feat2map.errors import UnsupportedLightState
from feat2map.features import JunctionFeature, MapFeature
from feat2map.model import Control, MapDoc
from feat2map.synthesis import SynthesisConfig, generate_map

r = math.radians

STOP = ("LF", "S_PS", "S_S", "S_C", "S_I", "LF")
PROTECTED = ("LF", "T_A", "T_C", "LF")
LEFT = ("LF", "L_A", "L_I", "LF")
LEFT_CREEP = ("LF", "L_A", "L_C", "L_I", "LF")
FOUR = {STOP, PROTECTED, LEFT, LEFT_CREEP}


class TestTurns:
    @pytest.mark.parametrize(
        "entry, exit_, turn",
        [
            (180, 90, Turn.LEFT),
            (180, -90, Turn.RIGHT),
            # entering from the west and leaving east keeps the heading
            (180, 0, Turn.STRAIGHT),
            (0, 180, Turn.STRAIGHT),
            (270, 180, Turn.LEFT),
            (270, 0, Turn.RIGHT),
            (0, 20, Turn.UTURN),
            (180, 45, Turn.STRAIGHT),
            (180, 46, Turn.LEFT),
            (180, 135, Turn.LEFT),
            (180, 136, Turn.UTURN),
            (180, -135, Turn.RIGHT),
        ],
    )
    def test_classify(self, entry, exit_, turn):
        assert classify_turn(r(entry), r(exit_)) is turn


class TestStagePaths:
    def test_stop(self):
        assert plan_stage_path(Control.STOP, Turn.STRAIGHT, False) == STOP

    def test_right_on_green(self):
        assert plan_stage_path("signal", "Right", True, "Green") == PROTECTED

    def test_bare(self):
        assert plan_stage_path("bare", "Straight", False) == ("LF",)

    def test_left(self):
        assert plan_stage_path("signal", "Left", False) == LEFT
        assert plan_stage_path("signal", "Left", True) == LEFT_CREEP

    def test_uturn_as_left(self):
        assert plan_stage_path("signal", "UTurn", False) == LEFT

    def test_red(self):
        with pytest.raises(UnsupportedLightState):
            plan_stage_path("signal", "Right", False, "Red")

    @pytest.mark.parametrize("ctrl", list(Control))
    @pytest.mark.parametrize("turn", list(Turn))
    @pytest.mark.parametrize("xwlk", [True, False])
    def test_shape(self, ctrl, turn, xwlk):
        path = plan_stage_path(ctrl, turn, xwlk)
        assert path[0] == "LF" and path[-1] == "LF"
        interior = {s.split("_")[0] for s in path[1:-1]}
        assert len(interior) <= 1


class TestRoutes:
    def test_fixture_routes(self, two_junction_map):
        routes = enumerate_routes(two_junction_map)
        assert len(routes) == 18
        j1 = [x for x in routes if x.junction_id == "J1"]
        # R3 arrives from the west; R4 is north (left) and R5 south (right)
        turns = {(x.entry_road, x.exit_road): x.turn for x in j1}
        assert turns[("R3", "R4")] is Turn.LEFT
        assert turns[("R3", "R5")] is Turn.RIGHT
        assert turns[("R4", "R5")] is Turn.STRAIGHT

    def test_empty(self):
        assert enumerate_routes(MapDoc()) == []

    def test_deterministic(self, city, config):
        doc = generate_map(city, config)
        assert enumerate_routes(doc) == enumerate_routes(doc)

    def test_count_matches_pairs(self, city, config):
        doc = generate_map(city, config)
        want = sum(len(j.sockets) * (len(j.sockets) - 1) for j in doc.junctions.values())
        assert len(enumerate_routes(doc)) == want


class TestReport:
    def test_fixture(self, two_junction_map):
        rep = coverage_report(two_junction_map)
        assert rep.path_set() == {STOP, PROTECTED, LEFT_CREEP}
        assert "StopSignUnprotected" in rep.scenarios

    def test_city(self, city, config):
        rep = coverage_report(generate_map(city, config))
        assert rep.path_set() == FOUR

    def test_merged(self, merged, config):
        rep = coverage_report(generate_map(merged, config))
        assert rep.path_set() == FOUR | {("LF",)}

    def test_only_stop(self, config):
        f = MapFeature({3, 4}, {"stop"}, {True, False}, {3: [(0, 0), (r(90), r(90)), (r(180), r(180))], 4: [(r(a), r(a)) for a in (0, 90, 180, 270)]})
        assert coverage_report(generate_map(f, config)).path_count == 1

    def test_seed_independent(self, city):
        a = coverage_report(generate_map(city, SynthesisConfig(seed=3)))
        b = coverage_report(generate_map(city, SynthesisConfig(seed=4)))
        assert a.paths == b.paths and a.scenarios == b.scenarios

    def test_monotone(self, config):
        base = [JunctionFeature(4, tuple(r(a) for a in (0, 90, 180, 270)), "signal", False)]
        extra = base + [JunctionFeature(3, (0.0, r(90), r(180)), "stop", False)]
        a = coverage_report(generate_map(base, config)).path_set()
        b = coverage_report(generate_map(extra, config)).path_set()
        assert a <= b

    def test_report_payload(self, two_junction_map):
        rep = coverage_report(two_junction_map)
        d = rep.to_dict()
        assert d["schema_version"] == "feat2map-coverage/1"
        assert d["path_count"] == 3
        assert "TrafficLightUnprotectedRightTurn" in d["not_coverable"]
        assert any("crosswalk" in a for a in d["assumptions"])
        text = rep.table()
        assert "LF -> S_PS -> S_S -> S_C -> S_I -> LF" in text
