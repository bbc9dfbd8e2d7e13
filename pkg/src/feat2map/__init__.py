"""Feature-driven HD map generation: extract junction features from maps,
sample a minimal diverse set and synthesize new grid-layout maps."""

from .coverage import CoverageReport, RouteTriple, Turn, classify_turn, coverage_report, enumerate_routes, plan_stage_path
from .errors import Feat2MapError
from .features import (
    JunctionFeature,
    MapFeature,
    compute_road_sockets,
    extract_map_feature,
    junction_feature,
    normalize_rotation,
)
from .geometry import CubicBezier, Point2, bezier_eval, bezier_from_endpoints, bezier_heading
from .mapio import dump_features, load_features, parse_map, render_svg, serialize_map
from .model import Control, MapDoc, SocketType, validate_map
from .synthesis import RoadChainSpec, RoadSegment, SynthesisConfig, build_road_chain, generate_map

__version__ = "0.1.0"
