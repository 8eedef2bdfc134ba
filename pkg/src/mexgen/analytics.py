"""Offline trajectory analytics over session archives.

Throw segmentation, per-axis quadratic fits (gravity recovery), spawn
alignment against the 10 Hz frame log, and deterministic SVG exports of
the throw/path visualizations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .recorder import FrameRecord, ObjectRecord, SessionArchive
from .types import SimError, Vec3

# color semantics: ash blue, controller orange, participant red
ASH_COLOR = "#1f77b4"
CONTROLLER_COLOR = "#ff7f0e"
PARTICIPANT_COLOR = "#d62728"


class DegenerateTrack(SimError):
    pass


@dataclass(frozen=True)
class ThrowSegment:
    object_id: int
    track: tuple[tuple[float, Vec3], ...]   # time-ordered, spawn first, despawn last

    @property
    def spawn(self) -> tuple[float, Vec3]:
        return self.track[0]

    @property
    def impact(self) -> tuple[float, Vec3]:
        return self.track[-1]


@dataclass(frozen=True)
class ParabolaFit:
    g_est: float
    v0_est: Vec3
    p0_est: Vec3
    rms_residual: float


def segment_throws(archive: SessionArchive) -> list[ThrowSegment]:
    """One segment per object id, spanning its spawn..despawn rows."""
    per_object: dict[int, list[ObjectRecord]] = {}
    for rec in archive.objects:
        per_object.setdefault(rec.object_id, []).append(rec)
    segments = []
    for oid in sorted(per_object):
        recs = per_object[oid]
        track = tuple((r.time_s, r.position) for r in recs)
        segments.append(ThrowSegment(object_id=oid, track=track))
    return segments


def fit_parabola(track: list[tuple[float, Vec3]]) -> ParabolaFit:
    """Per-axis least-squares quadratic in time; gravity from the z curvature."""
    if len(track) < 3:
        raise DegenerateTrack(f"need >= 3 points, got {len(track)}")
    times = np.array([t for t, _ in track], dtype=float)
    if len(np.unique(times)) < 3:
        raise DegenerateTrack("need >= 3 distinct timestamps")
    t0 = times[0]
    tau = times - t0
    pos = np.array([[p.x, p.y, p.z] for _, p in track], dtype=float)
    design = np.vander(tau, 3)  # columns tau^2, tau, 1
    coeffs, *_ = np.linalg.lstsq(design, pos, rcond=None)
    residuals = design @ coeffs - pos
    rms = float(np.sqrt(np.mean(residuals**2)))
    return ParabolaFit(
        g_est=float(-2.0 * coeffs[0, 2]),
        v0_est=Vec3(*(float(v) for v in coeffs[1])),
        p0_est=Vec3(*(float(v) for v in coeffs[2])),
        rms_residual=rms,
    )


def check_spawn_alignment(archive: SessionArchive) -> dict:
    """Distance between each throw's spawn point and the controller track.

    The controller position is linearly interpolated between the two 10 Hz
    frames adjacent to the release time — the same evidence an external
    analyst has. Throws outside frame coverage are flagged and excluded
    from the maximum.
    """
    frames = archive.frames
    throws = []
    excluded = []
    max_m: Optional[float] = None
    for seg in segment_throws(archive):
        t, spawn_pos = seg.spawn
        ctrl = _interp_controller(frames, t)
        if ctrl is None:
            excluded.append(seg.object_id)
            continue
        d = spawn_pos.dist(ctrl)
        throws.append({"object_id": seg.object_id, "distance_m": d})
        max_m = d if max_m is None else max(max_m, d)
    report: dict = {"throws": throws, "max_m": max_m}
    if excluded:
        report["excluded"] = excluded
    return report


def _interp_controller(frames: list[FrameRecord], t: float) -> Optional[Vec3]:
    if not frames:
        return None
    lo, hi = frames[0].time_s, frames[-1].time_s
    if t < lo - 1e-9 or t > hi + 1e-9:
        return None
    # frame i covers time i*0.1
    idx = (t - lo) / 0.1
    i = min(int(math.floor(idx + 1e-9)), len(frames) - 1)
    if i == len(frames) - 1:
        return frames[i].controller
    frac = (t - frames[i].time_s) / 0.1
    frac = min(max(frac, 0.0), 1.0)
    a, b = frames[i].controller, frames[i + 1].controller
    return Vec3(
        a.x + (b.x - a.x) * frac,
        a.y + (b.y - a.y) * frac,
        a.z + (b.z - a.z) * frac,
    )


# ---------------------------------------------------------------------------
# SVG export

_W, _H = 800.0, 600.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Panel:
    """Maps data coordinates into a pixel rectangle, y flipped."""

    def __init__(self, x: float, y: float, w: float, h: float,
                 xs: list[float], ys: list[float]):
        self.px, self.py, self.pw, self.ph = x, y, w, h
        self.x0, self.x1 = _bounds(xs)
        self.y0, self.y1 = _bounds(ys)

    def map(self, x: float, y: float) -> tuple[float, float]:
        u = self.px + (x - self.x0) / (self.x1 - self.x0) * self.pw
        v = self.py + self.ph - (y - self.y0) / (self.y1 - self.y0) * self.ph
        return u, v

    def frame_svg(self, title: str) -> list[str]:
        return [
            f'<rect x="{_fmt(self.px)}" y="{_fmt(self.py)}" width="{_fmt(self.pw)}"'
            f' height="{_fmt(self.ph)}" fill="none" stroke="#888" stroke-width="1"/>',
            f'<text x="{_fmt(self.px + 4)}" y="{_fmt(self.py + 14)}"'
            f' font-size="12" fill="#333">{title}</text>',
        ]

    def path_svg(self, pts: list[tuple[float, float]], color: str, cls: str) -> str:
        cmds = []
        for i, (x, y) in enumerate(pts):
            u, v = self.map(x, y)
            cmds.append(f"{'M' if i == 0 else 'L'}{_fmt(u)} {_fmt(v)}")
        return (
            f'<path class="{cls}" d="{" ".join(cmds)}" fill="none"'
            f' stroke="{color}" stroke-width="1.5"/>'
        )


def _bounds(values: list[float], pad: float = 0.05) -> tuple[float, float]:
    if not values:
        return -1.0, 1.0
    lo, hi = min(values), max(values)
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _iso(p: Vec3) -> tuple[float, float]:
    # fixed isometric projection for the 3D view
    c30, s30 = math.cos(math.pi / 6), math.sin(math.pi / 6)
    return ((p.x - p.y) * c30, (p.x + p.y) * s30 + p.z)


def export_plot(archive: SessionArchive, kind: str) -> str:
    if kind == "throws3d":
        return _plot_throws3d(archive)
    if kind == "paths2d":
        return _plot_paths2d(archive)
    raise SimError(f"unknown plot kind {kind!r}")


def _svg_open() -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(_W)}" height="{int(_H)}"'
        f' viewBox="0 0 {int(_W)} {int(_H)}">',
        f'<rect x="0" y="0" width="{int(_W)}" height="{int(_H)}" fill="#ffffff"/>',
    ]


def _legend(x: float, y: float, entries: list[tuple[str, str]]) -> list[str]:
    out = []
    for i, (label, color) in enumerate(entries):
        yy = y + 16 * i
        out.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(yy)}" width="12" height="12" fill="{color}"/>'
        )
        out.append(
            f'<text x="{_fmt(x + 18)}" y="{_fmt(yy + 10)}" font-size="12"'
            f' fill="#333">{label}</text>'
        )
    return out


def _plot_throws3d(archive: SessionArchive) -> str:
    segments = segment_throws(archive)
    ctrl_track = [(f.time_s, f.controller) for f in archive.frames]
    all_t = [t for t, _ in ctrl_track] + [t for s in segments for t, _ in s.track]
    all_pts = [p for _, p in ctrl_track] + [p for s in segments for _, p in s.track]

    out = _svg_open()
    axes = [("x [m]", lambda p: p.x), ("y [m]", lambda p: p.y), ("z [m]", lambda p: p.z)]
    panels = []
    for i, (label, get) in enumerate(axes):
        panel = _Panel(40 + i * 250, 40, 220, 240, all_t, [get(p) for p in all_pts])
        out.extend(panel.frame_svg(f"{label} vs t [s]"))
        panels.append((panel, get))
    iso_pts = [_iso(p) for p in all_pts]
    iso_panel = _Panel(40, 320, 460, 240,
                       [u for u, _ in iso_pts], [v for _, v in iso_pts])
    out.extend(iso_panel.frame_svg("isometric view"))

    if ctrl_track:
        for panel, get in panels:
            out.append(panel.path_svg([(t, get(p)) for t, p in ctrl_track],
                                      CONTROLLER_COLOR, "controller"))
        out.append(iso_panel.path_svg([_iso(p) for _, p in ctrl_track],
                                      CONTROLLER_COLOR, "controller"))
    for seg in segments:
        for panel, get in panels:
            out.append(panel.path_svg([(t, get(p)) for t, p in seg.track],
                                      ASH_COLOR, "ash"))
        out.append(iso_panel.path_svg([_iso(p) for _, p in seg.track], ASH_COLOR, "ash"))

    out.extend(_legend(560, 340, [("thrown ash", ASH_COLOR),
                                  ("controller", CONTROLLER_COLOR)]))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _plot_paths2d(archive: SessionArchive) -> str:
    segments = segment_throws(archive)
    walk = [f.participant for f in archive.frames]
    xs = [p.x for p in walk] + [p.x for s in segments for _, p in s.track]
    ys = [p.y for p in walk] + [p.y for s in segments for _, p in s.track]
    for tree in archive.scenario.trees:
        xs.append(tree.x)
        ys.append(tree.y)

    out = _svg_open()
    panel = _Panel(40, 40, 600, 520, xs, ys)
    out.extend(panel.frame_svg("plan view x/y [m]"))
    for tree in archive.scenario.trees:
        u, v = panel.map(tree.x, tree.y)
        out.append(
            f'<circle cx="{_fmt(u)}" cy="{_fmt(v)}" r="5" fill="none"'
            f' stroke="#555" stroke-width="1"/>'
        )
    if walk:
        out.append(panel.path_svg([(p.x, p.y) for p in walk],
                                  PARTICIPANT_COLOR, "participant"))
    for seg in segments:
        out.append(panel.path_svg([(p.x, p.y) for _, p in seg.track], ASH_COLOR, "ash"))
    out.extend(_legend(660, 60, [("participant", PARTICIPANT_COLOR),
                                 ("ash", ASH_COLOR)]))
    out.append("</svg>")
    return "\n".join(out) + "\n"
