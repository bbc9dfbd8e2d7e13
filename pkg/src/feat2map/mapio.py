"""Canonical JSON map/feature files and bird-view SVG rendering."""

from __future__ import annotations

import json
import math
import re
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import InvalidMap, MalformedInput, NonFiniteNumber, UnresolvedReference
from .features import JunctionFeature, MapFeature
from .geometry import CubicBezier, Point2
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

MAP_SCHEMA = "feat2map/1"
FEATURE_SCHEMA = "feat2map-features/1"
COVERAGE_SCHEMA = "feat2map-coverage/1"
DECIMALS = 9


# --- canonical writer --------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise NonFiniteNumber(f"cannot serialize {x}")
    s = f"{x:.{DECIMALS}f}"
    if s.startswith("-") and not s.strip("-0."):
        s = s[1:]
    return s


def _scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt_float(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    raise TypeError(f"unsupported value {v!r}")


def _write(v, indent: int, out: List[str]) -> None:
    pad = "  " * indent
    if isinstance(v, dict):
        if not v:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(v.items())
        for i, (k, val) in enumerate(items):
            out.append(f"{pad}  {json.dumps(str(k), ensure_ascii=False)}: ")
            _write(val, indent + 1, out)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    elif isinstance(v, (list, tuple)):
        if not v:
            out.append("[]")
        elif all(not isinstance(x, (dict, list, tuple)) for x in v):
            out.append("[" + ", ".join(_scalar(x) for x in v) + "]")
        else:
            out.append("[\n")
            for i, x in enumerate(v):
                out.append(pad + "  ")
                _write(x, indent + 1, out)
                out.append(",\n" if i + 1 < len(v) else "\n")
            out.append(pad + "]")
    else:
        out.append(_scalar(v))


def canonical_json(obj) -> bytes:
    """UTF-8 JSON with sorted keys, fixed 9-decimal floats and ``\\n`` line ends."""
    out: List[str] = []
    _write(obj, 0, out)
    out.append("\n")
    return "".join(out).encode("utf-8")


def load_json(data: Union[bytes, str]) -> Any:
    def reject(token):
        raise NonFiniteNumber(f"non-finite number {token}")

    try:
        text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
        return json.loads(text, parse_constant=reject)
    except NonFiniteNumber:
        raise
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"not valid JSON: {exc}") from None


def natural_key(ident: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", ident)]


# --- map documents -----------------------------------------------------------


def _pt(p: Point2) -> List[float]:
    return [float(p.x), float(p.y)]


def _curve(c: CubicBezier) -> List[List[float]]:
    return [_pt(p) for p in c.points]


def map_to_dict(doc: MapDoc) -> dict:
    def ordered(coll):
        return [coll[k] for k in sorted(coll, key=natural_key)]

    return {
        "schema_version": MAP_SCHEMA,
        "units": {"length": "meters", "angle": "radians"},
        "metadata": doc.metadata,
        "roads": [
            {
                "id": r.id,
                "reference": _curve(r.reference),
                "socket_type": r.socket_type.value,
                "forward_lane": r.forward_lane,
                "backward_lane": r.backward_lane,
                "start_junction": r.start_junction,
                "end_junction": r.end_junction,
            }
            for r in ordered(doc.roads)
        ],
        "lanes": [
            {
                "id": l.id,
                "kind": l.kind.value,
                "reference": _curve(l.reference),
                "width": float(l.width),
                "predecessors": list(l.predecessors),
                "successors": list(l.successors),
                "road_id": l.road_id,
                "junction_id": l.junction_id,
            }
            for l in ordered(doc.lanes)
        ],
        "junctions": [
            {
                "id": j.id,
                "center": _pt(j.center),
                "radius": float(j.radius),
                "sockets": [
                    {"road_id": s.road_id, "endpoint": _pt(s.endpoint), "angle": float(s.angle)}
                    for s in j.sockets
                ],
                "control": j.control.value,
                "has_crosswalks": bool(j.has_crosswalks),
                "junction_lane_ids": list(j.junction_lane_ids),
            }
            for j in ordered(doc.junctions)
        ],
        "controls": [
            {
                "id": d.id,
                "kind": d.kind.value,
                "junction_id": d.junction_id,
                "road_id": d.road_id,
                "lane_id": d.lane_id,
                "position": _pt(d.position),
                "facing": float(d.facing),
            }
            for d in ordered(doc.controls)
        ],
        "crosswalks": [
            {
                "id": c.id,
                "junction_id": c.junction_id,
                "road_id": c.road_id,
                "polygon": [_pt(p) for p in c.polygon],
                "width": float(c.width),
            }
            for c in ordered(doc.crosswalks)
        ],
    }


def serialize_map(doc: MapDoc) -> bytes:
    return canonical_json(map_to_dict(doc))


def _num(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedInput(f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise NonFiniteNumber(f"non-finite number {v}")
    return v


def _point(v) -> Point2:
    if not isinstance(v, list) or len(v) != 2:
        raise MalformedInput(f"expected [x, y], got {v!r}")
    return Point2(_num(v[0]), _num(v[1]))


def _bezier(v) -> CubicBezier:
    if not isinstance(v, list) or len(v) != 4:
        raise MalformedInput("a curve needs exactly 4 control points")
    return CubicBezier(*(_point(p) for p in v))


def _opt_str(v) -> Optional[str]:
    if v is not None and not isinstance(v, str):
        raise MalformedInput(f"expected an id or null, got {v!r}")
    return v


def _ids(v) -> List[str]:
    if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
        raise MalformedInput(f"expected a list of ids, got {v!r}")
    return list(v)


def map_from_dict(data: dict) -> MapDoc:
    if not isinstance(data, dict) or data.get("schema_version") != MAP_SCHEMA:
        raise MalformedInput(f"schema_version must be {MAP_SCHEMA!r}")
    try:
        doc = MapDoc(metadata=dict(data.get("metadata") or {}))
        for r in data["roads"]:
            doc.roads[r["id"]] = Road(
                id=r["id"],
                reference=_bezier(r["reference"]),
                socket_type=SocketType(r["socket_type"]),
                forward_lane=_opt_str(r.get("forward_lane")),
                backward_lane=_opt_str(r.get("backward_lane")),
                start_junction=_opt_str(r.get("start_junction")),
                end_junction=_opt_str(r.get("end_junction")),
            )
        for l in data["lanes"]:
            doc.lanes[l["id"]] = Lane(
                id=l["id"],
                kind=LaneKind(l["kind"]),
                reference=_bezier(l["reference"]),
                width=_num(l["width"]),
                predecessors=_ids(l.get("predecessors", [])),
                successors=_ids(l.get("successors", [])),
                road_id=_opt_str(l.get("road_id")),
                junction_id=_opt_str(l.get("junction_id")),
            )
        for j in data["junctions"]:
            doc.junctions[j["id"]] = Junction(
                id=j["id"],
                center=_point(j["center"]),
                radius=_num(j["radius"]),
                sockets=[
                    RoadSocket(s["road_id"], _point(s["endpoint"]), _num(s["angle"])) for s in j["sockets"]
                ],
                control=Control(j["control"]),
                has_crosswalks=bool(j["has_crosswalks"]),
                junction_lane_ids=_ids(j.get("junction_lane_ids", [])),
            )
        for d in data.get("controls", []):
            doc.controls[d["id"]] = TrafficControlDevice(
                id=d["id"],
                kind=DeviceKind(d["kind"]),
                junction_id=d["junction_id"],
                road_id=d["road_id"],
                lane_id=d["lane_id"],
                position=_point(d["position"]),
                facing=_num(d["facing"]),
            )
        for c in data.get("crosswalks", []):
            poly = [_point(p) for p in c["polygon"]]
            if len(poly) != 4:
                raise MalformedInput(f"crosswalk {c['id']} needs 4 corners")
            doc.crosswalks[c["id"]] = Crosswalk(
                id=c["id"], junction_id=c["junction_id"], road_id=c["road_id"], polygon=tuple(poly), width=_num(c["width"])
            )
    except (KeyError, TypeError, AttributeError) as exc:
        raise MalformedInput(f"missing or malformed field: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, MalformedInput):
            raise
        if "non-finite" in str(exc):
            raise NonFiniteNumber(str(exc)) from None
        raise MalformedInput(str(exc)) from None
    return doc


def parse_map(data: Union[bytes, str], strict: bool = False) -> MapDoc:
    """Parse a ``feat2map/1`` document.

    The validation report is attached as ``doc.issues``. With ``strict`` a
    non-empty report raises :class:`InvalidMap`.
    """
    doc = map_from_dict(load_json(data))
    issues = validate_map(doc)
    unresolved = [v for v in issues if v.code == "unresolved"]
    if unresolved:
        raise UnresolvedReference("; ".join(str(v) for v in unresolved))
    doc.issues = issues
    if strict and issues:
        raise InvalidMap(issues)
    return doc


def maps_close(a: MapDoc, b: MapDoc, tol: float = 1e-9) -> bool:
    """Structural equality with coordinates compared to ``tol``."""
    return _close(map_to_dict(a), map_to_dict(b), tol)


def _close(x, y, tol) -> bool:
    if isinstance(x, float) or isinstance(y, float):
        return isinstance(x, (int, float)) and isinstance(y, (int, float)) and abs(x - y) <= tol
    if isinstance(x, dict):
        return isinstance(y, dict) and x.keys() == y.keys() and all(_close(x[k], y[k], tol) for k in x)
    if isinstance(x, (list, tuple)):
        return isinstance(y, (list, tuple)) and len(x) == len(y) and all(_close(p, q, tol) for p, q in zip(x, y))
    return x == y


# --- feature files -----------------------------------------------------------


def _deg(values: Iterable[float]) -> List[float]:
    return [math.degrees(v) for v in values]


def junction_feature_to_dict(f: JunctionFeature) -> dict:
    return {
        "f_road": f.f_road,
        "f_rot": _deg(f.f_rot),
        "f_ctrl": f.f_ctrl.value,
        "f_xwlk": f.f_xwlk,
        "socket_types": [t.value for t in f.socket_types],
    }


def junction_feature_from_dict(d: dict) -> JunctionFeature:
    return JunctionFeature(
        f_road=int(d["f_road"]),
        f_rot=tuple(math.radians(_num(a)) for a in d["f_rot"]),
        f_ctrl=Control(d["f_ctrl"]),
        f_xwlk=bool(d["f_xwlk"]),
        socket_types=tuple(SocketType(t) for t in d.get("socket_types", ())),
    )


def features_to_dict(feature: Optional[MapFeature] = None, junctions: Sequence[JunctionFeature] = ()) -> dict:
    out: Dict[str, Any] = {"schema_version": FEATURE_SCHEMA, "units": {"angle": "degrees"}}
    if feature is not None:
        out["road_set"] = sorted(feature.road_set)
        out["ctrl_set"] = sorted(c.value for c in feature.ctrl_set)
        out["xwlk_set"] = sorted(feature.xwlk_set)
        out["rot_ranges"] = {
            str(n): [_deg(iv) for iv in feature.rot_ranges[n]] for n in sorted(feature.rot_ranges)
        }
    if junctions:
        out["junctions"] = [junction_feature_to_dict(j) for j in junctions]
    return out


def dump_features(feature: Optional[MapFeature] = None, junctions: Sequence[JunctionFeature] = ()) -> bytes:
    return canonical_json(features_to_dict(feature, junctions))


def load_features(data: Union[bytes, str]) -> Tuple[Optional[MapFeature], List[JunctionFeature]]:
    """Returns the map feature (if present) and any explicit junction features."""
    obj = load_json(data)
    if not isinstance(obj, dict) or obj.get("schema_version") != FEATURE_SCHEMA:
        raise MalformedInput(f"schema_version must be {FEATURE_SCHEMA!r}")
    try:
        feature = None
        if "road_set" in obj:
            feature = MapFeature(
                road_set=obj["road_set"],
                ctrl_set=obj["ctrl_set"],
                xwlk_set=obj["xwlk_set"],
                rot_ranges={
                    int(n): [tuple(math.radians(_num(a)) for a in iv) for iv in ivs]
                    for n, ivs in obj["rot_ranges"].items()
                },
            )
        junctions = [junction_feature_from_dict(d) for d in obj.get("junctions", [])]
    except (KeyError, TypeError, AttributeError) as exc:
        raise MalformedInput(f"missing or malformed field: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, MalformedInput):
            raise
        raise MalformedInput(str(exc)) from None
    if feature is None and not junctions:
        raise MalformedInput("feature file holds neither a map feature nor junction features")
    return feature, junctions


# --- SVG -----------------------------------------------------------------------

ROAD_LANE = "#9a9a9a"
JUNCTION_LANE = "#9fd3f2"


def _bounds(doc: MapDoc):
    xs, ys = [], []
    for lane in doc.lanes.values():
        for p in lane.reference.points:
            xs.append(p.x)
            ys.append(p.y)
    for j in doc.junctions.values():
        xs += [j.center.x - j.radius, j.center.x + j.radius]
        ys += [j.center.y - j.radius, j.center.y + j.radius]
    for d in doc.controls.values():
        xs.append(d.position.x)
        ys.append(d.position.y)
    if not xs:
        return 0.0, 0.0, 100.0, 100.0
    return min(xs), min(ys), max(xs), max(ys)


def render_svg(doc: MapDoc, scale: float = 2.0, show_ids: bool = False, margin: float = 10.0) -> bytes:
    """Deterministic SVG 1.1 bird view. ``scale`` is pixels per meter."""
    x0, y0, x1, y1 = _bounds(doc)
    x0, y0, x1, y1 = x0 - margin, y0 - margin, x1 + margin, y1 + margin
    width, height = (x1 - x0) * scale, (y1 - y0) * scale

    def X(x):
        return f"{(x - x0) * scale:.3f}"

    def Y(y):
        return f"{(y1 - y) * scale:.3f}"

    def path(c: CubicBezier):
        p0, p1, p2, p3 = c.points
        return f"M {X(p0.x)} {Y(p0.y)} C {X(p1.x)} {Y(p1.y)} {X(p2.x)} {Y(p2.y)} {X(p3.x)} {Y(p3.y)}"

    def poly(points):
        return " ".join(f"{X(p.x)},{Y(p.y)}" for p in points)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.3f}" height="{height:.3f}" '
        f'viewBox="0 0 {width:.3f} {height:.3f}">',
        f'<rect x="0" y="0" width="{width:.3f}" height="{height:.3f}" fill="#ffffff"/>',
    ]
    lane_w = f"{3.5 * scale * 0.8:.3f}"
    lines.append(f'<g id="road-lanes" fill="none" stroke="{ROAD_LANE}" stroke-width="{lane_w}">')
    for lid in sorted(doc.lanes, key=natural_key):
        lane = doc.lanes[lid]
        if lane.kind is LaneKind.ROAD:
            lines.append(f'<path id="{lid}" d="{path(lane.reference)}"/>')
    lines.append("</g>")

    walks: Dict[str, List[Crosswalk]] = {}
    for cw in doc.crosswalks.values():
        walks.setdefault(cw.junction_id, []).append(cw)
    devices: Dict[str, List[TrafficControlDevice]] = {}
    for d in doc.controls.values():
        devices.setdefault(d.junction_id, []).append(d)

    glyph = f"{1.2 * scale:.3f}"
    for jid in sorted(doc.junctions, key=natural_key):
        j = doc.junctions[jid]
        lines.append(f'<g class="junction" id="{jid}">')
        lines.append(
            f'<circle cx="{X(j.center.x)}" cy="{Y(j.center.y)}" r="{j.radius * scale:.3f}" '
            f'fill="#f4f4f4" stroke="#cccccc" stroke-width="1"/>'
        )
        for lid in j.junction_lane_ids:
            lines.append(
                f'<path d="{path(doc.lanes[lid].reference)}" fill="none" stroke="{JUNCTION_LANE}" '
                f'stroke-width="{1.0 * scale:.3f}"/>'
            )
        for cw in sorted(walks.get(jid, []), key=lambda c: natural_key(c.id)):
            lines.append(f'<polygon class="crosswalk" points="{poly(cw.polygon)}" fill="none" stroke="#333333" stroke-dasharray="3,2"/>')
        for d in sorted(devices.get(jid, []), key=lambda d: natural_key(d.id)):
            if d.kind is DeviceKind.SIGNAL:
                lines.append(f'<circle class="signal" cx="{X(d.position.x)}" cy="{Y(d.position.y)}" r="{glyph}" fill="#2e9e44"/>')
            else:
                oct_ = [d.position + Point2.polar(1.2, math.pi / 8 + k * math.pi / 4) for k in range(8)]
                lines.append(f'<polygon class="stop-sign" points="{poly(oct_)}" fill="#d62828"/>')
        if show_ids:
            lines.append(
                f'<text x="{X(j.center.x)}" y="{Y(j.center.y)}" font-size="{4 * scale:.3f}" '
                f'text-anchor="middle" font-family="sans-serif">{jid}</text>'
            )
        lines.append("</g>")
    if show_ids:
        lines.append('<g id="road-labels" font-family="sans-serif">')
        for rid in sorted(doc.roads, key=natural_key):
            mid = doc.roads[rid].reference
            p = Point2((mid.p0.x + mid.p3.x) / 2, (mid.p0.y + mid.p3.y) / 2)
            lines.append(f'<text x="{X(p.x)}" y="{Y(p.y)}" font-size="{3 * scale:.3f}">{rid}</text>')
        lines.append("</g>")
    lines.append("</svg>")
    return ("\n".join(lines) + "\n").encode("utf-8")
