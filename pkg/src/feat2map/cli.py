"""``feat2map`` command line: extract, generate, render, coverage, validate."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from typing import List, Optional

from . import plotting
from .coverage import coverage_report
from .errors import (
    EmptyInput,
    Feat2MapError,
    InvalidFeature,
    InvalidMap,
    MalformedInput,
    NoFeasiblePoint,
    NoJunctions,
    SocketConflict,
    UnsatisfiableRotation,
)
from .features import MapFeature, extract_map_feature
from .mapio import (
    load_json,
    canonical_json,
    dump_features,
    load_features,
    map_from_dict,
    parse_map,
    render_svg,
    serialize_map,
)
from .model import validate_map
from .presets import EXPLICIT_PRESETS, PRESETS
from .synthesis import SynthesisConfig, generate_map

log = logging.getLogger("feat2map")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INPUT = 2
EXIT_EMPTY = 3
EXIT_INFEASIBLE = 4


def write_atomic(path: str, data: bytes) -> None:
    """Write to a sibling temp file, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".feat2map-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        # mkstemp creates 0600; give the file the usual umask-derived mode
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(data: bytes, output: Optional[str]) -> None:
    if output:
        write_atomic(output, data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _load_config(args) -> SynthesisConfig:
    data = {}
    if getattr(args, "config", None):
        obj = load_json(_read(args.config))
        if not isinstance(obj, dict):
            raise MalformedInput("config file must hold a JSON object")
        data.update(obj)
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise MalformedInput(f"--set expects key=value, got {item!r}")
        try:
            data[key] = json.loads(value)
        except json.JSONDecodeError:
            raise MalformedInput(f"bad value for {key}: {value!r}") from None
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "allow_one_way", False):
        data["strict_two_way"] = False
    try:
        return SynthesisConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"bad config: {exc}") from None


# --- table rendering --------------------------------------------------------


def _set_str(values) -> str:
    return "{" + ", ".join(str(v) for v in values) + "}"


def feature_table(feature: MapFeature) -> str:
    """Two-column summary: discrete sets on the left, rotation ranges on the right."""
    ctrl = [c.value for c in sorted(feature.ctrl_set, key=lambda c: list(type(c)).index(c))]
    left = [
        f"F_road = {_set_str(sorted(feature.road_set))}",
        f"F_ctrl = {_set_str(ctrl)}",
        f"F_xwlk = {_set_str([x for x in (True, False) if x in feature.xwlk_set])}",
    ]
    right: List[str] = []
    for n in sorted(feature.rot_ranges):
        right.append(f"F_rot_{n} =")
        for lo, hi in feature.rot_ranges[n]:
            right.append(f"  [{math.degrees(lo):8.2f}, {math.degrees(hi):8.2f}]")
    width = max(len(s) for s in left) + 4
    rows = [f"{'Discrete features':<{width}}Rotation features (deg)", "-" * (width + 26)]
    for i in range(max(len(left), len(right))):
        l = left[i] if i < len(left) else ""
        r = right[i] if i < len(right) else ""
        rows.append(f"{l:<{width}}{r}".rstrip())
    return "\n".join(rows) + "\n"


# --- subcommands -------------------------------------------------------------


def cmd_extract(args) -> int:
    maps = [parse_map(_read(p)) for p in args.input]
    for path, doc in zip(args.input, maps):
        if doc.issues:
            log.warning("%s has %d validation issue(s)", path, len(doc.issues))
    feature = extract_map_feature(maps)
    data = dump_features(feature)
    if args.output:
        write_atomic(args.output, data)
        sys.stdout.write(feature_table(feature))
    elif args.format == "table":
        sys.stdout.write(feature_table(feature))
    else:
        _emit(data, None)
    if args.figure:
        plotting.plot_rotation_ranges(feature, args.figure)
    return EXIT_OK


def cmd_generate(args) -> int:
    config = _load_config(args)
    if args.preset:
        source = PRESETS[args.preset]() if args.preset in PRESETS else EXPLICIT_PRESETS[args.preset]()
    else:
        if not args.input:
            raise MalformedInput("generate needs --input FEATURES or --preset")
        if len(args.input) != 1:
            raise MalformedInput("generate takes exactly one features file")
        feature, junctions = load_features(_read(args.input[0]))
        # an explicit junction list wins over the map feature
        source = junctions if junctions else feature
    doc = generate_map(source, config, name=args.name)
    _emit(serialize_map(doc), args.output)
    echo = sys.stdout if args.output else sys.stderr
    echo.write(f"{len(doc.junctions)} junctions (seed {config.seed})\n")
    for v in doc.issues:
        sys.stderr.write(f"{v}\n")
    if args.figure:
        plotting.plot_map(doc, args.figure, title=f"{len(doc.junctions)} junctions, seed {config.seed}")
    return EXIT_OK if not doc.issues else EXIT_INVALID


def _single_map(args):
    if not args.input or len(args.input) != 1:
        raise MalformedInput("expected exactly one --input map")
    return parse_map(_read(args.input[0]))


def cmd_render(args) -> int:
    doc = _single_map(args)
    _emit(render_svg(doc, scale=args.scale, show_ids=args.show_ids), args.output)
    if args.figure:
        plotting.plot_map(doc, args.figure)
    return EXIT_OK


def cmd_coverage(args) -> int:
    doc = _single_map(args)
    report = coverage_report(doc)
    if args.output:
        write_atomic(args.output, canonical_json(report.to_dict()))
    if args.format == "table" or args.output:
        sys.stdout.write(report.table())
    else:
        _emit(canonical_json(report.to_dict()), None)
    if args.figure:
        plotting.plot_coverage(report, args.figure)
    return EXIT_OK


def cmd_validate(args) -> int:
    if not args.input or len(args.input) != 1:
        raise MalformedInput("expected exactly one --input map")
    # dangling references are reported as violations here, not parse errors
    doc = map_from_dict(load_json(_read(args.input[0])))
    issues = validate_map(doc)
    if args.format == "json":
        body = {
            "valid": not issues,
            "violations": [{"code": v.code, "ids": list(v.ids), "message": v.message} for v in issues],
        }
        _emit(canonical_json(body), args.output)
    else:
        text = "".join(f"{v}\n" for v in issues) or "valid\n"
        _emit(text.encode("utf-8"), args.output)
    return EXIT_OK if not issues else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feat2map", description="Feature-driven HD map generation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="json"):
        p.add_argument("-i", "--input", action="append", default=[], help="input file (repeatable)")
        p.add_argument("-o", "--output", help="output file (stdout when omitted)")
        p.add_argument("--format", choices=("json", "table"), default=fmt_default)
        p.add_argument("--strict", action="store_true", help="treat validation issues in inputs as errors")
        return p

    p = common(sub.add_parser("extract", help="extract a map feature from one or more maps"), "table")
    p.add_argument("--figure", help="also plot rotation ranges to this image file")
    p.set_defaults(func=cmd_extract)

    p = common(sub.add_parser("generate", help="generate a map from features"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", help="JSON synthesis config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config field")
    p.add_argument("--allow-one-way", action="store_true", help="accept one-way socket types")
    p.add_argument("--preset", choices=sorted(PRESETS) + sorted(EXPLICIT_PRESETS))
    p.add_argument("--name", default="feat2map")
    p.add_argument("--figure", help="also plot a bird view to this image file")
    p.set_defaults(func=cmd_generate)

    p = common(sub.add_parser("render", help="render a map to SVG"))
    p.add_argument("--scale", type=float, default=2.0, help="pixels per meter")
    p.add_argument("--show-ids", action="store_true")
    p.add_argument("--figure", help="also plot a matplotlib bird view")
    p.set_defaults(func=cmd_render)

    p = common(sub.add_parser("coverage", help="scenario stage-path coverage of a map"), "table")
    p.add_argument("--figure", help="also plot covered paths to this image file")
    p.set_defaults(func=cmd_coverage)

    p = common(sub.add_parser("validate", help="check map invariants"), "table")
    p.set_defaults(func=cmd_validate)
    return parser


def _strict_inputs(args) -> None:
    if not args.strict or args.command in ("validate", "generate"):
        return
    for path in args.input:
        parse_map(_read(path), strict=True)


def main(argv: Optional[List[str]] = None) -> int:
    level = os.environ.get("FEAT2MAP_LOG", "WARNING").upper()
    logging.basicConfig(
        level=level if isinstance(logging.getLevelName(level), int) else "WARNING",
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        _strict_inputs(args)
        return args.func(args)
    except (NoJunctions, EmptyInput) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_EMPTY
    except InvalidMap as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (UnsatisfiableRotation, NoFeasiblePoint, SocketConflict) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INFEASIBLE
    except (OSError, MalformedInput, InvalidFeature, Feat2MapError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
