import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import build_two_junction_map
from feat2map.errors import (
    DegenerateJunction,
    EmptyInput,
    GapSumMismatch,
    InvalidFeature,
    NoJunctions,
    UnknownJunction,
)
from feat2map.features import (
    JunctionFeature,
    MapFeature,
    compute_road_sockets,
    extract_map_feature,
    junction_feature,
    map_feature_from_junctions,
    merge_map_features,
    normalize_rotation,
    rotation_objective,
    unwrap_ccw,
    within_interval,
)
from feat2map.geometry import ccw_gap_angles
from feat2map.model import Control, MapDoc, SocketType

r = math.radians


def deg(values):
    return [math.degrees(v) for v in values]


def sweep_minimum(gaps, step_deg=0.01):
    """Brute-force objective minimum over alpha on a fine grid."""
    offsets = np.concatenate(([0.0], np.cumsum(gaps[:-1])))
    alphas = np.radians(np.arange(-45.0, 45.0 + step_deg, step_deg))
    x = alphas[:, None] + offsets[None, :]
    res = x - np.round(x / (math.pi / 2)) * (math.pi / 2)
    return (res * res).sum(axis=1).min()


def gap_vectors(n):
    return st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n).map(
        lambda w: [2 * math.pi * v / sum(w) for v in w]
    )


class TestNormalization:
    @pytest.mark.parametrize(
        "gaps, alpha, f_rot",
        [
            ([90, 90, 90, 90], 0.0, [0, 90, 180, 270]),
            ([120, 120, 120], 0.0, [0, 120, 240]),
            ([72] * 5, 0.0, [0, 72, 144, 216, 288]),
            ([90, 90, 180], 0.0, [0, 90, 180]),
            # anchor after the 160 gap; cardinals 0/90/180 give residuals 10, 0, 10
            ([100, 100, 160], -10.0, [-10, 90, 190]),
            # anchor after the 100 gap: offsets 0, 90, 180, 260
            ([80, 100, 90, 90], 2.5, [2.5, 92.5, 182.5, 262.5]),
        ],
    )
    def test_known_cases(self, gaps, alpha, f_rot):
        a, f = normalize_rotation([r(g) for g in gaps])
        assert math.degrees(a) == pytest.approx(alpha, abs=1e-9)
        assert deg(f) == pytest.approx(f_rot, abs=1e-9)

    def test_largest_gap_is_last(self):
        _, f = normalize_rotation([r(g) for g in (45, 135, 180)])
        gaps = np.diff(deg(f)).tolist() + [360 - (deg(f)[-1] - deg(f)[0])]
        assert gaps[-1] == pytest.approx(180)

    def test_bad_sum(self):
        with pytest.raises(GapSumMismatch):
            normalize_rotation([r(90), r(90), r(90)])

    def test_non_positive_gap(self):
        with pytest.raises(GapSumMismatch):
            normalize_rotation([0.0, math.pi, math.pi])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 5).flatmap(gap_vectors))
    def test_matches_sweep(self, gaps):
        a, f = normalize_rotation(gaps)
        offsets = [x - a for x in f]
        obj = rotation_objective(a, offsets)
        assert obj <= sweep_minimum(gaps) + math.radians(1e-2) ** 2
        assert -math.pi / 4 < a <= math.pi / 4 + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 6).flatmap(gap_vectors), st.floats(-math.pi, math.pi))
    def test_rotation_invariant(self, gaps, turn):
        # rotating a junction leaves its normalized feature unchanged, as long
        # as the largest gap (which fixes the socket order) is unique
        top, second = sorted(gaps)[-1], sorted(gaps)[-2]
        assume(top - second > 1e-6 and min(gaps) > 1e-3)
        angles = np.cumsum([0.0] + list(gaps[:-1])) + turn
        _, f1 = normalize_rotation(ccw_gap_angles(list(angles)))
        _, f2 = normalize_rotation(gaps)
        assert deg(f1) == pytest.approx(deg(f2), abs=1e-6)


class TestJunctionFeature:
    def test_unwraps(self):
        f = JunctionFeature(3, (r(0), r(90), r(-90)), Control.STOP, False)
        assert deg(f.f_rot) == pytest.approx([0, 90, 270])

    def test_default_socket_types(self):
        f = JunctionFeature(3, (0.0, r(90), r(180)), "signal", True)
        assert f.socket_types == (SocketType.IN_OUT,) * 3
        assert f.cell == (3, Control.SIGNAL, True)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(f_road=2, f_rot=(0.0, 1.0)),
            dict(f_road=3, f_rot=(0.0, 1.0)),
            dict(f_road=3, f_rot=(0.0, 1.0, float("inf"))),
            dict(f_road=3, f_rot=(0.0, 0.0, 1.0)),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidFeature):
            JunctionFeature(f_ctrl=Control.BARE, f_xwlk=False, **kwargs)

    def test_grid_placeable(self):
        assert JunctionFeature(4, (0.0, r(90), r(180), r(270)), "bare", False).grid_placeable()
        assert not JunctionFeature(3, (0.0, r(10), r(180)), "bare", False).grid_placeable()
        assert not JunctionFeature(5, tuple(r(a) for a in (0, 72, 144, 216, 288)), "bare", False).grid_placeable()


class TestMapFeature:
    def test_cells(self, city):
        cells = city.cells()
        assert len(cells) == 8
        assert cells[0] == (3, Control.SIGNAL, True)
        assert len(set(cells)) == 8

    def test_merged_cells(self, merged):
        assert len(merged.cells()) == 12

    def test_interval_count_checked(self):
        with pytest.raises(InvalidFeature):
            MapFeature({3}, {"stop"}, {True}, {3: [(0, 1), (2, 3)]})

    def test_missing_range(self):
        with pytest.raises(InvalidFeature):
            MapFeature({3, 4}, {"stop"}, {True}, {3: [(0, 1)] * 3})

    def test_empty_set(self):
        with pytest.raises(InvalidFeature):
            MapFeature({3}, set(), {True}, {3: [(0, 1)] * 3})

    def test_within_interval_is_circular(self):
        assert within_interval(r(270), r(-109), r(-69))
        assert within_interval(r(-143), r(140), r(230))
        assert not within_interval(r(100), r(-109), r(-69))
        assert within_interval(r(10) + 1e-7, 0.0, r(10), tol=1e-6)

    def test_merge(self):
        a = MapFeature({3}, {"stop"}, {True}, {3: [(0.0, 0.1), (1.5, 1.6), (3.0, 3.1)]})
        b = MapFeature({3, 4}, {"bare"}, {False}, {3: [(-0.1, 0.0), (1.6, 1.7), (3.0, 3.2)], 4: [(0.0, 0.0)] * 4})
        m = merge_map_features(a, b)
        assert m.road_set == {3, 4}
        assert m.ctrl_set == {Control.STOP, Control.BARE}
        assert m.rot_ranges[3] == ((-0.1, 0.1), (1.5, 1.7), (3.0, 3.2))


class TestExtraction:
    def test_sockets(self, two_junction_map):
        socks = compute_road_sockets(two_junction_map, "J1")
        assert [s.road_id for s in socks] == ["R4", "R3", "R5"]

    def test_junction_features(self, two_junction_map):
        j0 = junction_feature(two_junction_map, "J0")
        j1 = junction_feature(two_junction_map, "J1")
        assert j0.cell == (4, Control.SIGNAL, True)
        assert deg(j0.f_rot) == pytest.approx([0, 90, 180, 270], abs=1e-9)
        assert j1.cell == (3, Control.STOP, False)
        assert deg(j1.f_rot) == pytest.approx([0, 90, 180], abs=1e-9)

    def test_map_feature(self, two_junction_map):
        f = extract_map_feature([two_junction_map])
        assert f.road_set == {3, 4}
        assert f.ctrl_set == {Control.SIGNAL, Control.STOP}
        assert f.xwlk_set == {True, False}
        flat = [a for iv in f.rot_ranges[3] for a in deg(iv)]
        assert flat == pytest.approx([0, 0, 90, 90, 180, 180], abs=1e-9)

    def test_from_junctions_equals_extract(self, two_junction_map):
        feats = [junction_feature(two_junction_map, j) for j in ("J0", "J1")]
        assert map_feature_from_junctions(feats) == extract_map_feature([two_junction_map])

    def test_unknown(self, two_junction_map):
        with pytest.raises(UnknownJunction):
            compute_road_sockets(two_junction_map, "nope")

    def test_degenerate(self, two_junction_map):
        two_junction_map.junctions["J1"].sockets.pop()
        with pytest.raises(DegenerateJunction):
            compute_road_sockets(two_junction_map, "J1")

    def test_empty(self):
        with pytest.raises(EmptyInput):
            extract_map_feature([])
        with pytest.raises(NoJunctions):
            extract_map_feature([MapDoc()])

    def test_multi_map_union(self, two_junction_map):
        other = build_two_junction_map(crosswalks_at_j0=False)
        f = extract_map_feature([two_junction_map, other])
        assert f.xwlk_set == {True, False}

    def test_unwrap_rejects_coincident(self):
        with pytest.raises(InvalidFeature):
            unwrap_ccw([0.0, 2 * math.pi, 1.0])
