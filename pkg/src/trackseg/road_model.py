"""Route layouts: class map, segment chain, text format, random generation.

World frame: x east, y north, metres.  A route starts at the origin heading
along +x and chains its segments tangent-continuously.  Lateral offsets ``d``
are positive to the left of the direction of travel.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

__all__ = [
    "ClassEntry", "ClassMap", "DEFAULT_CLASS_MAP", "parse_class_map", "format_class_map",
    "SegmentSpec", "RouteLayout", "Pose2D", "LayoutError", "LayoutConstraintError",
    "LayoutConstraints", "PlacedSegment", "place_segments", "parse_layout", "format_layout",
    "load_layout", "validate_layout", "random_layout", "centerline", "sample_centerline",
    "default_layout", "normalize_angle", "footprint_overlaps", "layout_bounds",
]

UNLABELED = "unlabeled"
LEFT_LANE = "left lane"
RIGHT_LANE = "right lane"
DASHED_CENTER = "dashed center line"
DOUBLE_SOLID_CENTER = "double solid center line"
STARTING_LINE = "starting line"
STOP_LINE = "stop line"
CROSSWALK = "crosswalk"
FREE_PARKING_SPACE = "free parking space"
FREE_PARKING_AREA = "free parking area"

SEGMENT_KINDS = ("straight", "arc", "intersection", "parking_zone")
CENTER_STYLES = ("dashed", "double_solid", "missing")


class LayoutError(ValueError):
    pass


class LayoutConstraintError(ValueError):
    pass


def normalize_angle(a):
    """Wrap into (-pi, pi]."""
    return math.pi - (math.pi - a) % (2 * math.pi)


class Pose2D(NamedTuple):
    x: float
    y: float
    yaw: float


# ------------------------------------------------------------ class map

@dataclass(frozen=True)
class ClassEntry:
    id: int
    name: str
    color: tuple[int, int, int]


@dataclass(frozen=True)
class ClassMap:
    entries: tuple[ClassEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: e.id)))

    @property
    def ids(self) -> list[int]:
        return [e.id for e in self.entries]

    def id_of(self, name: str) -> int:
        for e in self.entries:
            if e.name == name:
                return e.id
        raise KeyError(f"class {name!r} not in class map")

    def name_of(self, class_id: int) -> str:
        for e in self.entries:
            if e.id == class_id:
                return e.name
        raise KeyError(class_id)

    def color_of(self, class_id: int) -> tuple[int, int, int]:
        for e in self.entries:
            if e.id == class_id:
                return e.color
        raise KeyError(class_id)

    def palette(self) -> np.ndarray:
        """(256, 3) uint8 lookup table id -> colour; unmapped ids map to black."""
        lut = np.zeros((256, 3), dtype=np.uint8)
        for e in self.entries:
            lut[e.id] = e.color
        return lut

    def violations(self) -> list[str]:
        out = []
        seen_ids: dict[int, ClassEntry] = {}
        seen_colors: dict[tuple, ClassEntry] = {}
        for e in self.entries:
            if not 0 <= e.id <= 255:
                out.append(f"class id {e.id} outside 0..255")
            if any(not 0 <= c <= 255 for c in e.color):
                out.append(f"class {e.id} colour {e.color} outside 0..255")
            if e.id in seen_ids:
                out.append(f"duplicate class id {e.id}")
            seen_ids[e.id] = e
            if e.color in seen_colors:
                out.append(f"classes {seen_colors[e.color].id} and {e.id} share colour {e.color}")
            else:
                seen_colors[e.color] = e
        if 0 not in seen_ids or seen_ids[0].name != UNLABELED:
            out.append("class id 0 must be 'unlabeled'")
        return out


DEFAULT_CLASS_MAP = ClassMap((
    ClassEntry(0, UNLABELED, (0, 0, 0)),
    ClassEntry(1, LEFT_LANE, (244, 35, 232)),
    ClassEntry(2, RIGHT_LANE, (128, 64, 128)),
    ClassEntry(3, DASHED_CENTER, (255, 255, 0)),
    ClassEntry(4, DOUBLE_SOLID_CENTER, (255, 128, 0)),
    ClassEntry(5, STARTING_LINE, (0, 255, 255)),
    ClassEntry(6, STOP_LINE, (255, 0, 0)),
    ClassEntry(7, CROSSWALK, (0, 0, 255)),
    ClassEntry(8, FREE_PARKING_SPACE, (0, 255, 0)),
    ClassEntry(9, FREE_PARKING_AREA, (0, 128, 0)),
))


def _parse_class_line(tokens: list[str], lineno: int) -> ClassEntry:
    if len(tokens) < 5:
        raise LayoutError(f"line {lineno}: class entry needs 'id name r g b'")
    try:
        cid = int(tokens[0])
        rgb = tuple(int(t) for t in tokens[-3:])
    except ValueError as exc:
        raise LayoutError(f"line {lineno}: non-numeric class field ({exc})") from None
    return ClassEntry(cid, " ".join(tokens[1:-3]), rgb)


def parse_class_map(text: str) -> ClassMap:
    """Parse ``id name r g b`` lines; names may contain spaces."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            entries.append(_parse_class_line(line.split(), lineno))
    cmap = ClassMap(tuple(entries))
    problems = cmap.violations()
    if problems:
        raise LayoutError("; ".join(problems))
    return cmap


def format_class_map(cmap: ClassMap) -> str:
    return "".join(f"{e.id} {e.name} {e.color[0]} {e.color[1]} {e.color[2]}\n" for e in cmap.entries)


# ------------------------------------------------------------ segments

@dataclass(frozen=True)
class SegmentSpec:
    """One piece of the route chain.

    Only the fields belonging to ``kind`` are meaningful:

    * straight: ``length``
    * arc: ``radius``, ``angle`` (radians, positive), ``direction``
    * intersection: ``arm_length`` (all four arms), ``crossing_width`` (extent
      of the junction box along the road, also the width of the crossing road)
    * parking_zone: ``side``, ``spaces``, ``space_length``, ``space_depth``,
      ``occupied`` flags and ``parking_style`` (separated ``spaces`` or one
      continuous ``area``)
    """

    kind: str
    length: float = 0.0
    radius: float = 0.0
    angle: float = 0.0
    direction: str = "left"
    arm_length: float = 0.5
    crossing_width: float = 0.8
    side: str = "right"
    spaces: int = 0
    space_length: float = 0.35
    space_depth: float = 0.5
    occupied: tuple[bool, ...] = ()
    parking_style: str = "spaces"
    center_line: str = "dashed"
    start_line: bool = False
    stop_line: bool = False
    crosswalk: bool = False

    @property
    def road_length(self) -> float:
        """Centerline arclength of the segment."""
        if self.kind == "straight":
            return self.length
        if self.kind == "arc":
            return self.radius * self.angle
        if self.kind == "intersection":
            return 2 * self.arm_length + self.crossing_width
        if self.kind == "parking_zone":
            return self.spaces * self.space_length
        raise ValueError(f"unknown segment kind {self.kind!r}")

    @property
    def curvature(self) -> float:
        if self.kind != "arc":
            return 0.0
        return (1.0 if self.direction == "left" else -1.0) / self.radius


@dataclass(frozen=True)
class RouteLayout:
    segments: tuple[SegmentSpec, ...]
    lane_width: float = 0.4
    line_width: float = 0.02
    meters_per_pixel: float = 0.005
    class_map: ClassMap = DEFAULT_CLASS_MAP
    seed: int | None = None
    dash_length: float = 0.2
    dash_gap: float = 0.2
    double_gap: float = 0.02
    max_raster_px: int = 4096

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def total_length(self) -> float:
        return sum(s.road_length for s in self.segments)


# ------------------------------------------------------------ geometry

@dataclass(frozen=True)
class PlacedSegment:
    """A segment anchored in the world: entry pose plus cumulative arclength."""

    geom: SegmentSpec
    index: int
    s0: float
    x0: float
    y0: float
    yaw0: float

    @property
    def length(self) -> float:
        return self.geom.road_length

    @property
    def s1(self) -> float:
        return self.s0 + self.length

    def _arc_center(self):
        r = self.geom.radius
        sign = 1.0 if self.geom.direction == "left" else -1.0
        return (self.x0 - sign * r * math.sin(self.yaw0),
                self.y0 + sign * r * math.cos(self.yaw0))

    def frame_at(self, s_local):
        """Centerline position, heading and curvature at local arclength(s)."""
        s = np.asarray(s_local, dtype=float)
        if self.geom.kind == "arc":
            k = self.geom.curvature
            cx, cy = self._arc_center()
            yaw = self.yaw0 + k * s
            sign = 1.0 if k > 0 else -1.0
            r = self.geom.radius
            x = cx + sign * r * np.sin(yaw)
            y = cy - sign * r * np.cos(yaw)
            return x, y, yaw, np.full_like(s, k)
        x = self.x0 + s * math.cos(self.yaw0)
        y = self.y0 + s * math.sin(self.yaw0)
        return x, y, np.full_like(s, self.yaw0), np.zeros_like(s)

    def end_pose(self) -> tuple[float, float, float]:
        x, y, yaw, _ = self.frame_at(self.length)
        return float(x), float(y), float(yaw)

    def local_coords(self, x, y):
        """World points -> (s, d, inside) for this segment's road frame.

        ``inside`` means the longitudinal coordinate is within [0, length).
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.geom.kind == "arc":
            cx, cy = self._arc_center()
            rx = x - cx
            ry = y - cy
            rho = np.hypot(rx, ry)
            phi = np.arctan2(ry, rx)
            r = self.geom.radius
            if self.geom.direction == "left":
                phi0 = self.yaw0 - math.pi / 2
                sweep = np.mod(phi - phi0, 2 * math.pi)
                d = r - rho
            else:
                phi0 = self.yaw0 + math.pi / 2
                sweep = np.mod(phi0 - phi, 2 * math.pi)
                d = rho - r
            s = r * sweep
            inside = sweep < self.geom.angle
            if self.geom.angle >= 2 * math.pi:
                inside = np.ones_like(inside)
            return s, d, inside
        c, sn = math.cos(self.yaw0), math.sin(self.yaw0)
        dx = x - self.x0
        dy = y - self.y0
        s = dx * c + dy * sn
        d = -dx * sn + dy * c
        return s, d, (s >= 0) & (s < self.length)


def place_segments(layout: RouteLayout) -> list[PlacedSegment]:
    placed = []
    x = y = yaw = 0.0
    s0 = 0.0
    for i, geom in enumerate(layout.segments):
        seg = PlacedSegment(geom, i, s0, x, y, yaw)
        placed.append(seg)
        x, y, yaw = seg.end_pose()
        s0 = seg.s1
    return placed


def sample_centerline(layout: RouteLayout, spacing: float):
    """Arrays ``(s, x, y, yaw, curvature)`` sampled at most ``spacing`` apart.

    Every segment boundary is a sample, so segment endpoints are exact.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    parts = []
    for k, seg in enumerate(place_segments(layout)):
        n = max(1, math.ceil(seg.length / spacing - 1e-9))
        local = seg.length * np.arange(0 if k == 0 else 1, n + 1) / n
        x, y, yaw, kappa = seg.frame_at(local)
        parts.append((seg.s0 + local, x, y, yaw, kappa))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(5))


def centerline(layout: RouteLayout, spacing: float) -> list[Pose2D]:
    _, x, y, yaw, _ = sample_centerline(layout, spacing)
    return [Pose2D(float(a), float(b), normalize_angle(float(c))) for a, b, c in zip(x, y, yaw)]


def frame_at_arclength(layout: RouteLayout, s, placed=None):
    """Centerline ``(x, y, yaw, curvature, segment index)`` at global arclength ``s``."""
    placed = placed or place_segments(layout)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    starts = np.array([p.s0 for p in placed])
    idx = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(placed) - 1)
    x = np.empty_like(s)
    y = np.empty_like(s)
    yaw = np.empty_like(s)
    kappa = np.empty_like(s)
    for i, seg in enumerate(placed):
        m = idx == i
        if m.any():
            x[m], y[m], yaw[m], kappa[m] = seg.frame_at(s[m] - seg.s0)
    return x, y, yaw, kappa, idx


def _reach(geom: SegmentSpec, lane_width: float) -> float:
    # crossing arms of intersections are sampled separately
    if geom.kind == "parking_zone":
        return lane_width + geom.space_depth
    return lane_width


def _footprint_samples(layout: RouteLayout, step: float):
    """Disc cover of the drawn route.

    Returns points, route position, reach, offset along a crossing arm and arm
    id (-1 on the main chain).
    """
    pts, pos, reach, off, arm = [], [], [], [], []
    for seg in place_segments(layout):
        n = max(1, math.ceil(seg.length / step))
        local = seg.length * np.arange(n + 1) / n
        x, y, _, _ = seg.frame_at(local)
        r = _reach(seg.geom, layout.lane_width)
        for xi, yi, li in zip(x, y, local):
            pts.append((xi, yi))
            pos.append(seg.s0 + li)
            reach.append(r)
            off.append(0.0)
            arm.append(-1)
        if seg.geom.kind == "intersection":
            geom = seg.geom
            sc = geom.arm_length + geom.crossing_width / 2
            bx, by, byaw, _ = seg.frame_at(sc)
            nx, ny = -math.sin(byaw), math.cos(byaw)
            extent = layout.lane_width + geom.arm_length
            m = max(1, math.ceil(extent / step))
            for t in extent * np.arange(1, m + 1) / m:
                for sgn in (1.0, -1.0):
                    pts.append((bx + sgn * t * nx, by + sgn * t * ny))
                    pos.append(seg.s0 + sc)
                    reach.append(geom.crossing_width / 2)
                    off.append(t)
                    arm.append(2 * seg.index + (sgn > 0))
    return np.array(pts), np.array(pos), np.array(reach), np.array(off), np.array(arm)


def footprint_overlaps(layout: RouteLayout, closed: bool = False) -> bool:
    """True when route parts that are far apart along the chain come too close.

    Conservative disc test: pieces separated by more than a half turn's
    arclength must keep their road footprints disjoint.
    """
    step = max(layout.lane_width / 2, 0.05)
    pts, pos, reach, off, arm = _footprint_samples(layout, step)
    if len(pts) < 2:
        return False
    dist = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    sep = np.abs(pos[:, None] - pos[None, :])
    if closed:
        sep = np.minimum(sep, layout.total_length - sep)
    same_arm = (arm[:, None] == arm[None, :]) & (arm[:, None] >= 0)
    sep = np.where(same_arm, np.abs(off[:, None] - off[None, :]), sep + off[:, None] + off[None, :])
    rsum = reach[:, None] + reach[None, :]
    check = sep > (math.pi / 2) * rsum + step
    return bool(np.any(check & (dist < rsum)))


def layout_bounds(layout: RouteLayout, margin: float = 0.1):
    """World bounding box ``(xmin, ymin, xmax, ymax)`` of everything drawn."""
    pts, _, reach, _, _ = _footprint_samples(layout, max(layout.meters_per_pixel * 4, 0.01))
    pad = reach + margin
    xmin = float(np.min(pts[:, 0] - pad))
    xmax = float(np.max(pts[:, 0] + pad))
    ymin = float(np.min(pts[:, 1] - pad))
    ymax = float(np.max(pts[:, 1] + pad))
    return xmin, ymin, xmax, ymax


# ------------------------------------------------------------ validation

def _segment_violations(i: int, s: SegmentSpec, layout: RouteLayout) -> list[str]:
    out = []
    tag = f"segment {i}"
    if s.kind not in SEGMENT_KINDS:
        return [f"{tag}: unknown segment kind {s.kind!r}"]
    if s.center_line not in CENTER_STYLES:
        out.append(f"{tag}: unknown center line style {s.center_line!r}")
    if s.kind == "straight":
        if not s.length > 0:
            out.append(f"{tag}: length must be positive")
    elif s.kind == "arc":
        if s.direction not in ("left", "right"):
            out.append(f"{tag}: arc direction must be left or right")
        if not 0 < s.angle <= 2 * math.pi:
            out.append(f"{tag}: angle must satisfy 0 < angle <= 2*pi")
        if not s.radius > layout.lane_width:
            out.append(f"{tag}: radius ≤ lane_width ({s.radius:g} ≤ {layout.lane_width:g})")
    elif s.kind == "intersection":
        if not s.arm_length > 0:
            out.append(f"{tag}: arm length must be positive")
        if not s.crossing_width >= 2 * layout.lane_width:
            out.append(f"{tag}: crossing width must be at least the road width")
    elif s.kind == "parking_zone":
        if s.side not in ("left", "right"):
            out.append(f"{tag}: parking side must be left or right")
        if s.parking_style not in ("spaces", "area"):
            out.append(f"{tag}: parking style must be spaces or area")
        if s.spaces < 1:
            out.append(f"{tag}: parking zone needs at least one space")
        if not s.space_length > 2 * layout.line_width:
            out.append(f"{tag}: space length must exceed two line widths")
        if not s.space_depth > layout.line_width:
            out.append(f"{tag}: space depth must exceed the line width")
        if len(s.occupied) != s.spaces:
            out.append(f"{tag}: {len(s.occupied)} occupancy flags for {s.spaces} spaces")
    return out


def validate_layout(layout: RouteLayout) -> list[str]:
    """All violated invariants as messages; empty when the layout is valid."""
    out = []
    if not layout.lane_width > 0:
        out.append("lane_width must be positive")
    if not layout.line_width > 0:
        out.append("line_width must be positive")
    if not layout.meters_per_pixel > 0:
        out.append("meters_per_pixel must be positive")
    if layout.lane_width > 0 and layout.line_width > 0 and not layout.lane_width > 2 * layout.line_width:
        out.append("lane_width must exceed 2 * line_width")
    if not layout.segments:
        out.append("layout needs at least one segment")
    if layout.dash_length <= 0 or layout.dash_gap < 0 or layout.double_gap < 0:
        out.append("dash pattern lengths must be positive")
    if layout.lane_width > 0:
        for i, s in enumerate(layout.segments):
            out.extend(_segment_violations(i, s, layout))
    out.extend(layout.class_map.violations())
    return out


# ------------------------------------------------------------ text format

_GLOBAL_KEYS = {
    "lane_width": float, "line_width": float, "meters_per_pixel": float, "seed": int,
    "dash_length": float, "dash_gap": float, "double_gap": float, "max_raster_px": int,
}


def _parse_bool(value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _segment_from_fields(kind: str, fields: dict[str, str]) -> SegmentSpec:
    num = {
        "length_m": ("length", float), "radius_m": ("radius", float),
        "arm_m": ("arm_length", float), "crossing_m": ("crossing_width", float),
        "spaces": ("spaces", int), "space_length_m": ("space_length", float),
        "space_depth_m": ("space_depth", float),
    }
    kw = {}
    occupied = None
    for key, value in fields.items():
        if key in num:
            name, conv = num[key]
            kw[name] = conv(value)
        elif key == "angle_deg":
            kw["angle"] = math.radians(float(value))
        elif key == "angle_rad":
            kw["angle"] = float(value)
        elif key == "dir":
            kw["direction"] = value
        elif key == "side":
            kw["side"] = value
        elif key == "style":
            kw["parking_style"] = value
        elif key == "center":
            kw["center_line"] = value
        elif key in ("start_line", "stop_line", "crosswalk"):
            kw[key] = _parse_bool(value)
        elif key == "occupied":
            if not set(value) <= {"0", "1"}:
                raise ValueError(f"occupied must be a 0/1 string, got {value!r}")
            occupied = tuple(c == "1" for c in value)
        else:
            raise KeyError(key)
    if kind == "parking_zone":
        kw["occupied"] = occupied if occupied is not None else (False,) * kw.get("spaces", 0)
    return SegmentSpec(kind, **kw)


def parse_layout(text: str, base_dir=None) -> RouteLayout:
    """Parse and validate the layout text format.

    Globals are ``key = value`` lines, segments are
    ``segment <kind> key=value ...`` lines, ``class id name r g b`` lines
    replace the default class map and ``#`` starts a comment.
    """
    glob: dict = {}
    segments: list[SegmentSpec] = []
    seg_lines: list[int] = []
    classes: list[ClassEntry] = []
    class_map = DEFAULT_CLASS_MAP
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "segment":
            if len(tokens) < 2:
                raise LayoutError(f"line {lineno}: segment kind missing")
            kind = tokens[1]
            if kind not in SEGMENT_KINDS:
                raise LayoutError(f"line {lineno}: unknown segment kind {kind!r}")
            fields = {}
            for tok in tokens[2:]:
                if "=" not in tok:
                    raise LayoutError(f"line {lineno}: expected key=value, got {tok!r}")
                k, v = tok.split("=", 1)
                fields[k] = v
            try:
                segments.append(_segment_from_fields(kind, fields))
            except KeyError as exc:
                raise LayoutError(f"line {lineno}: unknown segment field {exc.args[0]!r}") from None
            except ValueError as exc:
                raise LayoutError(f"line {lineno}: non-numeric or invalid field ({exc})") from None
            seg_lines.append(lineno)
        elif tokens[0] == "class":
            classes.append(_parse_class_line(tokens[1:], lineno))
        elif "=" in line:
            key, value = (p.strip() for p in line.split("=", 1))
            if key == "class_map":
                path = Path(value)
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                try:
                    class_map = parse_class_map(path.read_text(encoding="utf-8"))
                except OSError as exc:
                    raise LayoutError(f"line {lineno}: cannot read class map ({exc})") from None
                continue
            if key not in _GLOBAL_KEYS:
                raise LayoutError(f"line {lineno}: unknown key {key!r}")
            try:
                glob[key] = _GLOBAL_KEYS[key](value)
            except ValueError:
                raise LayoutError(f"line {lineno}: non-numeric value for {key}: {value!r}") from None
        else:
            raise LayoutError(f"line {lineno}: cannot parse {line!r}")
    if classes:
        class_map = ClassMap(tuple(classes))
    layout = RouteLayout(tuple(segments), class_map=class_map, **glob)
    problems = validate_layout(layout)
    if problems:
        first = problems[0]
        lineno = None
        if first.startswith("segment "):
            idx = int(first.split()[1].rstrip(":"))
            lineno = seg_lines[idx]
        where = f"line {lineno}: " if lineno else ""
        raise LayoutError(where + "; ".join(problems))
    return layout


def load_layout(path) -> RouteLayout:
    path = Path(path)
    return parse_layout(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _num(v: float) -> str:
    return f"{v:.10g}"


def format_layout(layout: RouteLayout) -> str:
    lines = []
    if layout.seed is not None:
        lines.append(f"seed = {layout.seed}")
    lines += [
        f"lane_width = {_num(layout.lane_width)}",
        f"line_width = {_num(layout.line_width)}",
        f"meters_per_pixel = {_num(layout.meters_per_pixel)}",
    ]
    defaults = RouteLayout(())
    for key in ("dash_length", "dash_gap", "double_gap", "max_raster_px"):
        if getattr(layout, key) != getattr(defaults, key):
            lines.append(f"{key} = {_num(getattr(layout, key))}")
    if layout.class_map != DEFAULT_CLASS_MAP:
        for e in layout.class_map.entries:
            lines.append(f"class {e.id} {e.name} {e.color[0]} {e.color[1]} {e.color[2]}")
    for s in layout.segments:
        parts = ["segment", s.kind]
        if s.kind == "straight":
            parts.append(f"length_m={_num(s.length)}")
        elif s.kind == "arc":
            parts += [f"radius_m={_num(s.radius)}", f"angle_deg={_num(math.degrees(s.angle))}",
                      f"dir={s.direction}"]
        elif s.kind == "intersection":
            parts += [f"arm_m={_num(s.arm_length)}", f"crossing_m={_num(s.crossing_width)}"]
        elif s.kind == "parking_zone":
            parts += [f"side={s.side}", f"spaces={s.spaces}",
                      f"space_length_m={_num(s.space_length)}", f"space_depth_m={_num(s.space_depth)}",
                      "occupied=" + "".join("1" if o else "0" for o in s.occupied),
                      f"style={s.parking_style}"]
        parts.append(f"center={s.center_line}")
        for flag in ("start_line", "stop_line", "crosswalk"):
            if getattr(s, flag):
                parts.append(f"{flag}=yes")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


DEFAULT_LAYOUT_TEXT = """\
# Sample route: start straight, left curve, intersection, crosswalk,
# parking zone and a closing right curve.
lane_width = 0.4
line_width = 0.02
meters_per_pixel = 0.005

segment straight length_m=1.5 center=dashed start_line=yes
segment arc radius_m=1.2 angle_deg=90 dir=left center=double_solid
segment intersection arm_m=0.6 crossing_m=0.8 center=dashed stop_line=yes
segment straight length_m=1.2 center=dashed crosswalk=yes
segment parking_zone side=right spaces=4 space_length_m=0.35 space_depth_m=0.5 occupied=0100 style=spaces center=dashed
segment arc radius_m=1.5 angle_deg=120 dir=right center=dashed
"""


def default_layout() -> RouteLayout:
    return parse_layout(DEFAULT_LAYOUT_TEXT)


# ------------------------------------------------------------ generation

@dataclass(frozen=True)
class LayoutConstraints:
    min_segments: int = 4
    max_segments: int = 8
    kinds: tuple[str, ...] = SEGMENT_KINDS
    radius_range: tuple[float, float] = (0.8, 2.0)
    angle_range: tuple[float, float] = (math.pi / 6, math.pi)
    length_range: tuple[float, float] = (0.8, 2.5)
    arm_range: tuple[float, float] = (0.4, 0.8)
    space_count_range: tuple[int, int] = (2, 5)
    center_styles: tuple[str, ...] = CENTER_STYLES
    directions: tuple[str, ...] = ("left", "right")
    marking_probability: float = 0.25
    lane_width: float = 0.4
    line_width: float = 0.02
    meters_per_pixel: float = 0.005
    closed: bool = False
    max_attempts: int = 500

    def problems(self) -> list[str]:
        out = []
        if self.min_segments < 1 or self.min_segments > self.max_segments:
            out.append("segment count range is empty")
        if not self.kinds:
            out.append("no segment kinds allowed")
        if set(self.kinds) - set(SEGMENT_KINDS):
            out.append(f"unknown kinds {sorted(set(self.kinds) - set(SEGMENT_KINDS))}")
        if not self.center_styles or set(self.center_styles) - set(CENTER_STYLES):
            out.append("center line styles must be a non-empty subset of dashed/double_solid/missing")
        if not self.directions or set(self.directions) - {"left", "right"}:
            out.append("turn directions must be a non-empty subset of left/right")
        for name in ("radius_range", "angle_range", "length_range", "arm_range", "space_count_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                out.append(f"{name} is empty ({lo} > {hi})")
        if "arc" in self.kinds and self.radius_range[1] <= self.lane_width:
            out.append("radius_range admits no radius above lane_width")
        if "arc" in self.kinds and (self.angle_range[1] <= 0 or self.angle_range[0] > 2 * math.pi):
            out.append("angle_range must intersect (0, 2*pi]")
        if "straight" in self.kinds and self.length_range[1] <= 0:
            out.append("length_range must admit positive lengths")
        if "parking_zone" in self.kinds and self.space_count_range[1] < 1:
            out.append("space_count_range must admit at least one space")
        if not self.lane_width > 2 * self.line_width > 0:
            out.append("lane_width must exceed 2 * line_width")
        return out


def _q(v: float) -> float:
    """Quantize to millimetres so that layouts survive a text round-trip exactly."""
    return round(v, 3)


def _draw_segment(rng: random.Random, c: LayoutConstraints) -> SegmentSpec:
    kind = rng.choice(c.kinds)
    common = dict(
        center_line=rng.choice(c.center_styles),
        start_line=rng.random() < c.marking_probability,
        stop_line=rng.random() < c.marking_probability,
        crosswalk=rng.random() < c.marking_probability,
    )
    if kind == "straight":
        lo = max(c.length_range[0], 0.001)
        return SegmentSpec("straight", length=_q(rng.uniform(lo, c.length_range[1])), **common)
    if kind == "arc":
        lo = max(c.radius_range[0], c.lane_width + 0.001)
        radius = _q(rng.uniform(lo, c.radius_range[1]))
        a_lo = max(c.angle_range[0], 1e-3)
        a_hi = min(c.angle_range[1], 2 * math.pi)
        deg = round(math.degrees(rng.uniform(a_lo, a_hi)), 3)
        return SegmentSpec("arc", radius=radius, angle=math.radians(deg),
                           direction=rng.choice(c.directions), **common)
    if kind == "intersection":
        return SegmentSpec("intersection", arm_length=_q(rng.uniform(*c.arm_range)),
                           crossing_width=_q(2 * c.lane_width), **common)
    n = rng.randint(max(1, c.space_count_range[0]), c.space_count_range[1])
    return SegmentSpec(
        "parking_zone", side=rng.choice(("left", "right")), spaces=n,
        occupied=tuple(rng.random() < 0.5 for _ in range(n)),
        parking_style=rng.choice(("spaces", "area")), **common)


def random_layout(seed: int, constraints: LayoutConstraints | None = None) -> RouteLayout:
    """Deterministic random layout; retries until the route does not overlap itself."""
    c = constraints or LayoutConstraints()
    problems = c.problems()
    if problems:
        raise LayoutConstraintError("; ".join(problems))
    rng = random.Random(seed)
    max_px = RouteLayout(()).max_raster_px
    for _ in range(c.max_attempts):
        n = rng.randint(c.min_segments, c.max_segments)
        segs = tuple(_draw_segment(rng, c) for _ in range(n))
        layout = RouteLayout(segs, lane_width=c.lane_width, line_width=c.line_width,
                             meters_per_pixel=c.meters_per_pixel, seed=seed)
        if validate_layout(layout):
            continue
        if c.closed:
            x, y, _ = place_segments(layout)[-1].end_pose()
            if math.hypot(x, y) >= c.lane_width:
                continue
        if footprint_overlaps(layout, closed=c.closed):
            continue
        xmin, ymin, xmax, ymax = layout_bounds(layout)
        if max(xmax - xmin, ymax - ymin) / c.meters_per_pixel > max_px:
            continue
        return layout
    raise LayoutConstraintError(
        f"no valid layout found for seed {seed} after {c.max_attempts} attempts")
