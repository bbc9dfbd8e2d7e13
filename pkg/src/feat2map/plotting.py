"""Matplotlib figures for the CLI report paths (written to files, Agg backend)."""

from __future__ import annotations

import math
import os
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .coverage import STAGES, CoverageReport  # noqa: E402
from .features import JunctionFeature, MapFeature  # noqa: E402
from .geometry import sample_bezier  # noqa: E402
from .model import DeviceKind, LaneKind, MapDoc  # noqa: E402

# fixed metadata keeps PNG/SVG bytes stable across runs
_META = {"png": {"Software": None}, "svg": {"Date": None, "Creator": None}, "pdf": {"CreationDate": None, "Producer": None}}


def _save(fig, path: str) -> None:
    ext = os.path.splitext(path)[1].lstrip(".").lower() or "png"
    fig.savefig(path, dpi=120, metadata=_META.get(ext), format=ext)
    plt.close(fig)


def plot_coverage(report: CoverageReport, path: str) -> None:
    """Stage-by-path grid: one row per covered path, stages as columns."""
    fig, ax = plt.subplots(figsize=(8, 1.2 + 0.6 * max(1, len(report.paths))))
    for row, p in enumerate(report.paths):
        # LF is shown at both ends of a junction traversal
        xs = [0 if (s == "LF" and i == 0) else (len(STAGES) if s == "LF" else STAGES.index(s)) for i, s in enumerate(p)]
        ys = [row] * len(xs)
        ax.plot(xs, ys, "-o", color="tab:orange", markersize=8)
        ax.text(len(STAGES) + 0.4, row, " -> ".join(p), va="center", fontsize=8)
    ax.set_xticks(list(range(len(STAGES))) + [len(STAGES)])
    ax.set_xticklabels(list(STAGES) + ["LF"])
    ax.set_yticks(range(len(report.paths)))
    ax.set_yticklabels([f"path {i + 1}" for i in range(len(report.paths))])
    ax.set_xlim(-0.5, len(STAGES) + 6)
    ax.set_ylim(-0.7, max(0.7, len(report.paths) - 0.3))
    ax.invert_yaxis()
    ax.set_title(f"covered stage paths: {report.path_count}")
    fig.tight_layout()
    _save(fig, path)


def plot_rotation_ranges(
    feature: MapFeature, path: str, junctions: Sequence[JunctionFeature] = ()
) -> None:
    """Rotation intervals per socket index, with optional concrete rotations overlaid."""
    counts = sorted(feature.rot_ranges)
    fig, axes = plt.subplots(len(counts), 1, figsize=(7, 1.6 + 1.3 * len(counts)), squeeze=False)
    for ax, n in zip(axes[:, 0], counts):
        for i, (lo, hi) in enumerate(feature.rot_ranges[n]):
            ax.barh(i, math.degrees(hi - lo), left=math.degrees(lo), height=0.5, color="tab:blue", alpha=0.4)
        for jf in junctions:
            if jf.f_road == n:
                ax.plot([math.degrees(a) for a in jf.f_rot], range(n), "k.", markersize=6)
        ax.set_yticks(range(n))
        ax.set_yticklabels([f"socket {i + 1}" for i in range(n)])
        ax.set_title(f"{n}-legged junctions", fontsize=9)
        ax.set_xlabel("rotation (deg)")
    fig.tight_layout()
    _save(fig, path)


def plot_map(doc: MapDoc, path: str, title: Optional[str] = None) -> None:
    """Bird view of lanes, junction discs, controls and crosswalks."""
    fig, ax = plt.subplots(figsize=(7, 7))
    for lid in sorted(doc.lanes):
        lane = doc.lanes[lid]
        xy = sample_bezier(lane.reference)
        if lane.kind is LaneKind.ROAD:
            ax.plot(xy[:, 0], xy[:, 1], color="0.55", linewidth=1.6)
        else:
            ax.plot(xy[:, 0], xy[:, 1], color="#7cc0e8", linewidth=0.7)
    for jid in sorted(doc.junctions):
        j = doc.junctions[jid]
        ax.add_patch(plt.Circle((j.center.x, j.center.y), j.radius, fill=False, color="0.8"))
        ax.text(j.center.x, j.center.y, jid, ha="center", va="center", fontsize=7)
    for cid in sorted(doc.crosswalks):
        poly = [p.as_tuple() for p in doc.crosswalks[cid].polygon]
        ax.add_patch(plt.Polygon(poly, closed=True, fill=False, hatch="///", edgecolor="0.3", linewidth=0.5))
    for did in sorted(doc.controls):
        d = doc.controls[did]
        if d.kind is DeviceKind.SIGNAL:
            ax.plot(d.position.x, d.position.y, "o", color="tab:green", markersize=4)
        else:
            ax.plot(d.position.x, d.position.y, "8", color="tab:red", markersize=5)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
