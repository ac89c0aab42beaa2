"""Top-down rasterization of route layouts and driving trajectories.

Every pixel is classified analytically from its road-frame coordinates
(arclength ``s``, lateral offset ``d``) relative to each segment, so curves
and dash patterns are exact and annotation edges are hard.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import road_model as rm
from .imaging import Raster
from .road_model import PlacedSegment, RouteLayout

__all__ = [
    "TopDownPair", "RenderError", "ManeuverError", "ManeuverSpec", "Trajectory",
    "render_topdown", "generate_trajectory", "insert_maneuver", "drivable_ids",
    "parse_maneuver", "world_to_topdown", "parking_space_polygon",
    "SURFACE_RGB", "MARKING_RGB", "OBSTACLE_RGB",
]

SURFACE_RGB = (40, 40, 40)
MARKING_RGB = (255, 255, 255)
OBSTACLE_RGB = (110, 110, 110)

START_LINE_WIDTH = 0.05
STOP_LINE_WIDTH = 0.04
CROSSWALK_LENGTH = 0.3
CROSSWALK_STRIPE = 0.04


class RenderError(ValueError):
    pass


class ManeuverError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TopDownPair:
    raw: Raster
    annotation_color: Raster
    annotation_id: Raster
    meters_per_pixel: float
    world_origin: tuple[float, float]
    """World ``(x, y)`` of the centre of pixel (0, 0); rows run toward -y."""

    @property
    def width(self) -> int:
        return self.raw.width

    @property
    def height(self) -> int:
        return self.raw.height


def world_to_topdown(pair_or_origin, mpp=None, x=None, y=None):
    """World metres -> continuous top-down pixel coordinates ``(u, v)``."""
    if isinstance(pair_or_origin, TopDownPair):
        (ox, oy), mpp = pair_or_origin.world_origin, pair_or_origin.meters_per_pixel
    else:
        ox, oy = pair_or_origin
    return (np.asarray(x) - ox) / mpp, (oy - np.asarray(y)) / mpp


# ------------------------------------------------------------ rendering

class _Canvas:
    def __init__(self, layout: RouteLayout, margin: float):
        xmin, ymin, xmax, ymax = rm.layout_bounds(layout, margin)
        mpp = layout.meters_per_pixel
        self.mpp = mpp
        self.width = int(math.ceil((xmax - xmin) / mpp)) + 1
        self.height = int(math.ceil((ymax - ymin) / mpp)) + 1
        if max(self.width, self.height) > layout.max_raster_px:
            raise RenderError(
                f"layout needs a {self.width}x{self.height} raster, "
                f"limit is {layout.max_raster_px} px per side")
        self.origin = (xmin, ymax)
        self.ids = np.zeros((self.height, self.width), dtype=np.uint8)
        self.raw = np.empty((self.height, self.width, 3), dtype=np.uint8)
        self.raw[...] = SURFACE_RGB

    def window(self, xs, ys, pad):
        """Pixel slice covering world points ``xs, ys`` grown by ``pad`` metres,
        plus the world coordinates of its pixel centres."""
        ox, oy = self.origin
        u0 = max(int(math.floor((np.min(xs) - pad - ox) / self.mpp)), 0)
        u1 = min(int(math.ceil((np.max(xs) + pad - ox) / self.mpp)) + 1, self.width)
        v0 = max(int(math.floor((oy - np.max(ys) - pad) / self.mpp)), 0)
        v1 = min(int(math.ceil((oy - np.min(ys) + pad) / self.mpp)) + 1, self.height)
        if u0 >= u1 or v0 >= v1:
            return None
        X = ox + np.arange(u0, u1) * self.mpp
        Y = oy - np.arange(v0, v1) * self.mpp
        X, Y = np.meshgrid(X, Y)
        return (slice(v0, v1), slice(u0, u1)), X, Y


@dataclass
class _Frame:
    """Road-frame coordinates of one window of pixels."""

    sl: tuple
    s: np.ndarray
    d: np.ndarray
    inside: np.ndarray


def _segment_frame(canvas: _Canvas, seg: PlacedSegment, reach: float, lo=0.0, hi=None):
    n = max(2, int(math.ceil(seg.length / 0.05)) + 1)
    xs, ys, _, _ = seg.frame_at(np.linspace(0.0, seg.length, n))
    win = canvas.window(xs, ys, reach)
    if win is None:
        return None
    sl, X, Y = win
    s, d, _ = seg.local_coords(X, Y)
    hi = seg.length if hi is None else hi
    if seg.geom.kind == "arc" and lo < 0:
        wrapped = s - 2 * math.pi * seg.geom.radius
        s = np.where(wrapped >= lo, wrapped, s)
    return _Frame(sl, s, d, (s >= lo) & (s < hi))


def _arm_frame(canvas: _Canvas, seg: PlacedSegment, sign: float, layout: RouteLayout):
    """Frame of a crossing arm; ``s`` runs outward from the junction centre."""
    geom = seg.geom
    sc = geom.arm_length + geom.crossing_width / 2
    bx, by, byaw, _ = seg.frame_at(sc)
    yaw = float(byaw) + sign * math.pi / 2
    half = geom.crossing_width / 2
    arm = PlacedSegment(rm.SegmentSpec("straight", length=half + geom.arm_length),
                        -1, 0.0, float(bx), float(by), yaw)
    # pad the open end by a pixel so that a pose on the arm tip stays labelled
    return _segment_frame(canvas, arm, half + layout.line_width, lo=half,
                          hi=arm.length + layout.meters_per_pixel)


def _paint(canvas: _Canvas, fr: _Frame, mask, class_id=None, rgb=None):
    if class_id is not None:
        canvas.ids[fr.sl][mask] = class_id
    if rgb is not None:
        canvas.raw[fr.sl][mask] = rgb


def _paint_center_line(canvas, fr, style, s_global, layout, ids, in_range):
    lw = layout.line_width
    if style == "dashed":
        period = layout.dash_length + layout.dash_gap
        on = np.mod(s_global, period) < layout.dash_length
        m = in_range & (np.abs(fr.d) <= lw / 2) & on
        _paint(canvas, fr, m, ids[rm.DASHED_CENTER], MARKING_RGB)
    elif style == "double_solid":
        half_gap = layout.double_gap / 2
        band = in_range & (np.abs(fr.d) <= half_gap + lw)
        _paint(canvas, fr, band, ids[rm.DOUBLE_SOLID_CENTER])
        _paint(canvas, fr, band & (np.abs(fr.d) >= half_gap), rgb=MARKING_RGB)


def _class_ids(layout: RouteLayout) -> dict[str, int]:
    names = (rm.UNLABELED, rm.LEFT_LANE, rm.RIGHT_LANE, rm.DASHED_CENTER, rm.DOUBLE_SOLID_CENTER,
             rm.STARTING_LINE, rm.STOP_LINE, rm.CROSSWALK, rm.FREE_PARKING_SPACE,
             rm.FREE_PARKING_AREA)
    try:
        return {n: layout.class_map.id_of(n) for n in names}
    except KeyError as exc:
        raise RenderError(f"class map lacks a class the renderer draws: {exc.args[0]}") from None


def drivable_ids(layout: RouteLayout) -> set[int]:
    """Class ids a vehicle may stand on: everything painted on road or parking surface."""
    ids = _class_ids(layout)
    return {v for k, v in ids.items() if k != rm.UNLABELED}


def render_topdown(layout: RouteLayout, margin: float = 0.1) -> TopDownPair:
    """Rasterize ``layout`` into raw, colour-annotated and class-id top-down images."""
    problems = rm.validate_layout(layout)
    if problems:
        raise RenderError("; ".join(problems))
    ids = _class_ids(layout)
    canvas = _Canvas(layout, margin)
    lane = layout.lane_width
    lw = layout.line_width
    placed = rm.place_segments(layout)

    frames = {}
    last = len(placed) - 1
    for seg in placed:
        reach = rm._reach(seg.geom, lane) + lw
        # one pixel of slack so the open route ends are drawn
        lo = -canvas.mpp if seg.index == 0 else 0.0
        hi = seg.length + canvas.mpp if seg.index == last else None
        frames[seg.index] = _segment_frame(canvas, seg, reach, lo, hi)
    arms = {}
    for seg in placed:
        if seg.geom.kind == "intersection":
            arms[seg.index] = [f for f in (_arm_frame(canvas, seg, sg, layout) for sg in (1.0, -1.0))
                               if f is not None]

    # parking strips
    for seg in placed:
        fr = frames[seg.index]
        geom = seg.geom
        if fr is None or geom.kind != "parking_zone":
            continue
        side = 1.0 if geom.side == "left" else -1.0
        e = side * fr.d
        L = seg.length
        strip = (fr.s >= -lw / 2) & (fr.s <= L + lw / 2) & (e >= lane) & (e <= lane + geom.space_depth)
        slot = np.clip(np.floor(fr.s / geom.space_length), 0, geom.spaces - 1).astype(int)
        occupied = np.asarray(geom.occupied, dtype=bool)[slot]
        free_cls = ids[rm.FREE_PARKING_SPACE] if geom.parking_style == "spaces" else ids[rm.FREE_PARKING_AREA]
        _paint(canvas, fr, strip & ~occupied, free_cls)
        _paint(canvas, fr, strip & occupied, ids[rm.UNLABELED], OBSTACLE_RGB)
        k = np.round(fr.s / geom.space_length)
        near_sep = np.abs(fr.s - k * geom.space_length) <= lw / 2
        if geom.parking_style == "area":
            near_sep &= (k == 0) | (k == geom.spaces)
        lines = strip & (near_sep | (e >= lane + geom.space_depth - lw))
        _paint(canvas, fr, lines, ids[rm.UNLABELED], MARKING_RGB)

    # lanes and edge lines
    for seg in placed:
        fr = frames[seg.index]
        if fr is None:
            continue
        road = fr.inside & (np.abs(fr.d) <= lane)
        _paint(canvas, fr, road & (fr.d >= 0), ids[rm.LEFT_LANE])
        _paint(canvas, fr, road & (fr.d < 0), ids[rm.RIGHT_LANE])
        edge = road & (np.abs(fr.d) >= lane - lw)
        if seg.geom.kind == "intersection":
            a, cw = seg.geom.arm_length, seg.geom.crossing_width
            edge &= (fr.s < a) | (fr.s >= a + cw)
        _paint(canvas, fr, edge, rgb=MARKING_RGB)
        for ar in arms.get(seg.index, ()):
            half = seg.geom.crossing_width / 2
            arm_road = ar.inside & (np.abs(ar.d) <= half)
            _paint(canvas, ar, arm_road & (ar.d >= 0), ids[rm.LEFT_LANE])
            _paint(canvas, ar, arm_road & (ar.d < 0), ids[rm.RIGHT_LANE])
            _paint(canvas, ar, arm_road & (np.abs(ar.d) >= half - lw), rgb=MARKING_RGB)

    # markings
    for seg in placed:
        fr = frames[seg.index]
        if fr is None:
            continue
        geom = seg.geom
        L = seg.length
        road = fr.inside & (np.abs(fr.d) <= lane)
        in_range = fr.inside
        if geom.kind == "intersection":
            a, cw = geom.arm_length, geom.crossing_width
            in_range = fr.inside & ((fr.s < a) | (fr.s >= a + cw))
            for ar in arms.get(seg.index, ()):
                _paint_center_line(canvas, ar, geom.center_line, ar.s, layout, ids, ar.inside)
        _paint_center_line(canvas, fr, geom.center_line, seg.s0 + fr.s, layout, ids, in_range)

        if geom.crosswalk:
            if geom.kind == "intersection":
                mid = geom.arm_length * 1.5 + geom.crossing_width
                length = min(CROSSWALK_LENGTH, 0.8 * geom.arm_length)
            else:
                mid = L / 2
                length = min(CROSSWALK_LENGTH, 0.8 * L)
            band = road & (np.abs(fr.s - mid) <= length / 2)
            _paint(canvas, fr, band, ids[rm.CROSSWALK], SURFACE_RGB)
            stripes = np.mod(np.floor((fr.d + lane) / CROSSWALK_STRIPE), 2) == 0
            _paint(canvas, fr, band & stripes, rgb=MARKING_RGB)
        if geom.stop_line:
            end = geom.arm_length if geom.kind == "intersection" else L
            band = road & (fr.d <= 0) & (fr.s >= end - STOP_LINE_WIDTH) & (fr.s < end)
            _paint(canvas, fr, band, ids[rm.STOP_LINE], MARKING_RGB)
        if geom.start_line:
            band = road & (fr.s < START_LINE_WIDTH)
            _paint(canvas, fr, band, ids[rm.STARTING_LINE], MARKING_RGB)

    from .annotation_pipeline import color_to_id

    color = Raster.from_array(layout.class_map.palette()[canvas.ids])
    return TopDownPair(
        raw=Raster.from_array(canvas.raw),
        annotation_color=color,
        annotation_id=color_to_id(color, layout.class_map, policy="strict"),
        meters_per_pixel=canvas.mpp,
        world_origin=canvas.origin,
    )


# ------------------------------------------------------------ trajectories

@dataclass(eq=False)
class Trajectory:
    """Vehicle poses plus their centerline arclength and lateral offset.

    ``offset`` is NaN for poses that leave the centerline parameterization
    (turns into crossing arms).
    """

    x: np.ndarray
    y: np.ndarray
    yaw: np.ndarray
    s: np.ndarray = field(default=None)
    offset: np.ndarray = field(default=None)
    offset_rate: np.ndarray = field(default=None)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.yaw = np.array([rm.normalize_angle(a) for a in np.asarray(self.yaw, dtype=float)])
        n = len(self.x)
        for name in ("s", "offset", "offset_rate"):
            v = getattr(self, name)
            setattr(self, name, np.full(n, np.nan) if v is None else np.asarray(v, dtype=float))

    def __len__(self):
        return len(self.x)

    def poses(self) -> list[rm.Pose2D]:
        return [rm.Pose2D(float(a), float(b), float(c)) for a, b, c in zip(self.x, self.y, self.yaw)]

    def path_length(self) -> float:
        return float(np.sum(np.hypot(np.diff(self.x), np.diff(self.y))))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x_m", "y_m", "yaw_rad"])
        for a, b, c in zip(self.x, self.y, self.yaw):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> Trajectory:
        rows = list(csv.DictReader(io.StringIO(text)))
        if rows and set(rows[0]) != {"x_m", "y_m", "yaw_rad"}:
            raise ValueError("trajectory CSV needs header x_m,y_m,yaw_rad")
        return cls([float(r["x_m"]) for r in rows], [float(r["y_m"]) for r in rows],
                   [float(r["yaw_rad"]) for r in rows])

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> Trajectory:
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def _offset_poses(layout, s, d, dd, placed=None):
    """Poses at lateral offset ``d`` (rate ``dd``) from the centerline at ``s``."""
    cx, cy, th, kappa, _ = rm.frame_at_arclength(layout, s, placed)
    x = cx - d * np.sin(th)
    y = cy + d * np.cos(th)
    yaw = th + np.arctan2(dd, 1.0 - d * kappa)
    return x, y, yaw


def _arclength_grid(layout: RouteLayout, spacing: float, offset: float) -> np.ndarray:
    """Centerline arclengths such that poses at ``offset`` are <= ``spacing`` apart."""
    out = []
    for k, seg in enumerate(rm.place_segments(layout)):
        stretch = max(1.0, 1.0 - offset * seg.geom.curvature)
        n = max(1, math.ceil(seg.length * stretch / spacing - 1e-9))
        local = seg.length * np.arange(0 if k == 0 else 1, n + 1) / n
        out.append(seg.s0 + local)
    return np.concatenate(out)


def generate_trajectory(layout: RouteLayout, spacing: float = 0.05) -> Trajectory:
    """Poses along the right-lane centre, half a lane right of the centerline."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    d0 = -layout.lane_width / 2
    s = _arclength_grid(layout, spacing, d0)
    d = np.full_like(s, d0)
    dd = np.zeros_like(s)
    x, y, yaw = _offset_poses(layout, s, d, dd)
    return Trajectory(x, y, yaw, s, d, dd)


@dataclass(frozen=True)
class ManeuverSpec:
    """``overtake`` over arclength window [start, start + length];
    ``park`` into space ``space`` of the ``zone``-th parking zone;
    ``cross_intersection`` of the ``index``-th intersection going ``direction``."""

    kind: str
    start: float = 0.0
    length: float = 0.0
    space: int = 0
    zone: int = 0
    direction: str = "straight"
    index: int = 0


def parse_maneuver(tokens: list[str]) -> ManeuverSpec:
    """``['overtake', 'start_m=2', 'length_m=2']`` -> ManeuverSpec."""
    if not tokens:
        raise ValueError("maneuver kind missing")
    kind = tokens[0]
    if kind not in ("overtake", "park", "cross_intersection"):
        raise ValueError(f"unknown maneuver {kind!r}")
    conv = {"start_m": ("start", float), "length_m": ("length", float), "space": ("space", int),
            "zone": ("zone", int), "direction": ("direction", str), "index": ("index", int)}
    kw = {}
    for tok in tokens[1:]:
        key, _, value = tok.partition("=")
        if key not in conv:
            raise ValueError(f"unknown maneuver field {key!r}")
        name, f = conv[key]
        kw[name] = f(value)
    return ManeuverSpec(kind, **kw)


def _segments_of(layout, kind):
    return [p for p in rm.place_segments(layout) if p.geom.kind == kind]


def _ease(t):
    """Cosine ease 0 -> 1 on [0, 1] and its derivative."""
    t = np.clip(t, 0.0, 1.0)
    return (1 - np.cos(np.pi * t)) / 2, np.pi * np.sin(np.pi * t) / 2


def parking_space_polygon(layout: RouteLayout, zone: int, space: int) -> np.ndarray:
    """Corner points (4, 2) of a parking space, inside its marking lines."""
    zones = _segments_of(layout, "parking_zone")
    seg = zones[zone]
    geom = seg.geom
    side = 1.0 if geom.side == "left" else -1.0
    lw = layout.line_width
    s_a = seg.s0 + space * geom.space_length + lw / 2
    s_b = seg.s0 + (space + 1) * geom.space_length - lw / 2
    e_a = layout.lane_width
    e_b = layout.lane_width + geom.space_depth - lw
    corners = []
    for s, e in ((s_a, e_a), (s_b, e_a), (s_b, e_b), (s_a, e_b)):
        x, y, _ = _offset_poses(layout, np.array([s]), np.array([side * e]), np.zeros(1))
        corners.append((float(x[0]), float(y[0])))
    return np.array(corners)


def insert_maneuver(traj: Trajectory, m: ManeuverSpec, layout: RouteLayout) -> Trajectory:
    """Apply a driving maneuver to a centerline-parameterized trajectory."""
    placed = rm.place_segments(layout)
    total = layout.total_length
    s, d, dd = traj.s.copy(), traj.offset.copy(), traj.offset_rate.copy()
    lane = layout.lane_width

    if m.kind == "overtake":
        lo, hi = m.start, m.start + m.length
        if m.length <= 0 or lo < 0 or hi > total + 1e-9:
            raise ManeuverError(f"overtake window [{lo:g}, {hi:g}] outside route [0, {total:g}]")
        for p in placed:
            if p.geom.kind == "intersection" and p.s0 < hi and lo < p.s1:
                raise ManeuverError(
                    f"overtake window overlaps intersection segment {p.index}; no left lane to use")
        w = (s >= lo) & (s <= hi)
        if np.any(np.isnan(d[w])):
            raise ManeuverError("overtake window covers poses off the centerline")
        phase = 2 * np.pi * (s[w] - lo) / m.length
        d[w] = d[w] + lane * (1 - np.cos(phase)) / 2
        dd[w] = dd[w] + lane * np.pi * np.sin(phase) / m.length
        x, y, yaw = _offset_poses(layout, s, d, dd, placed)
        return Trajectory(x, y, yaw, s, d, dd)

    if m.kind == "park":
        zones = _segments_of(layout, "parking_zone")
        if not 0 <= m.zone < len(zones):
            raise ManeuverError(f"no parking zone {m.zone}")
        seg = zones[m.zone]
        geom = seg.geom
        if not 0 <= m.space < geom.spaces:
            raise ManeuverError(f"parking zone {m.zone} has no space {m.space}")
        if geom.occupied[m.space]:
            raise ManeuverError(f"parking space {m.space} is occupied")
        side = 1.0 if geom.side == "left" else -1.0
        s_c = seg.s0 + (m.space + 0.5) * geom.space_length
        d_c = side * (lane + geom.space_depth / 2)
        keep = s < s_c - 1e-12
        if np.any(np.isnan(d[keep])):
            raise ManeuverError("parking approach leaves the centerline")
        d_start = float(np.interp(s_c, s[keep], d[keep])) if keep.any() else -lane / 2
        # the road edge must be crossed inside the target space, clear of its separator
        frac = (side * lane - d_start) / (d_c - d_start)
        t_edge = math.acos(1 - 2 * frac) / math.pi
        clear = geom.space_length / 2 - layout.line_width
        width = clear / (1 - t_edge)
        s0 = s_c - width
        if s0 < 0:
            raise ManeuverError("parking space too close to the route start for the approach")
        s_new = np.append(s[keep], s_c)
        d_new = np.append(d[keep], d_c)
        dd_new = np.append(dd[keep], 0.0)
        w = s_new >= s0
        b, db = _ease((s_new[w] - s0) / width)
        base, base_rate = d_new[w].copy(), dd_new[w].copy()
        base[-1], base_rate[-1] = d_start, 0.0
        d_new[w] = base * (1 - b) + d_c * b
        dd_new[w] = base_rate * (1 - b) + (d_c - base) * db / width
        x, y, yaw = _offset_poses(layout, s_new, d_new, dd_new, placed)
        return Trajectory(x, y, yaw, s_new, d_new, dd_new)

    if m.kind == "cross_intersection":
        return _cross_intersection(traj, m, layout, placed)

    raise ManeuverError(f"unknown maneuver {m.kind!r}")


def _cross_intersection(traj, m, layout, placed):
    inters = [p for p in placed if p.geom.kind == "intersection"]
    if not 0 <= m.index < len(inters):
        raise ManeuverError(f"no intersection {m.index}")
    seg = inters[m.index]
    geom = seg.geom
    lane = layout.lane_width
    s, d, dd = traj.s, traj.offset, traj.offset_rate
    spacing = float(np.max(np.hypot(np.diff(traj.x), np.diff(traj.y)))) if len(traj) > 1 else 0.05

    if m.direction == "straight":
        keep = s < seg.s1 - 1e-12
        s_new = np.append(s[keep], seg.s1)
        d_new = np.append(d[keep], -lane / 2)
        dd_new = np.append(dd[keep], 0.0)
        x, y, yaw = _offset_poses(layout, s_new, d_new, dd_new, placed)
        return Trajectory(x, y, yaw, s_new, d_new, dd_new)
    if m.direction not in ("left", "right"):
        raise ManeuverError(f"unknown crossing direction {m.direction!r}")

    s_entry = seg.s0 + geom.arm_length
    keep = s < s_entry - 1e-12
    if np.any(np.abs(d[keep][-3:] + lane / 2) > 1e-9):
        raise ManeuverError("vehicle must approach the intersection in the right lane")
    cw = geom.crossing_width
    # turn geometry in the junction frame: origin at box centre, x along the road
    if m.direction == "right":
        radius, turn = cw / 4, -1.0
        tail = geom.arm_length + lane / 2 - cw / 4
    else:
        radius, turn = 3 * cw / 4, 1.0
        tail = geom.arm_length + 1.5 * lane - 0.75 * cw
    if tail < 0:
        raise ManeuverError("crossing arm too short for the turn")
    arc_len = radius * math.pi / 2
    total = arc_len + tail
    n = max(1, math.ceil(total / spacing - 1e-9))
    t = total * np.arange(n + 1) / n
    on_arc = t <= arc_len
    phi = np.where(on_arc, t, arc_len) / radius
    lx = -cw / 2 + radius * np.sin(phi)
    ly = -lane / 2 + turn * radius * (1 - np.cos(phi))
    lyaw = turn * phi
    extra = np.where(on_arc, 0.0, t - arc_len)
    ly = ly + turn * extra
    bx, by, byaw, _ = seg.frame_at(geom.arm_length + cw / 2)
    c, sn = math.cos(float(byaw)), math.sin(float(byaw))
    wx = float(bx) + c * lx - sn * ly
    wy = float(by) + sn * lx + c * ly
    x0, y0, yaw0 = _offset_poses(layout, s[keep], d[keep], dd[keep], placed)
    return Trajectory(
        np.concatenate([x0, wx]), np.concatenate([y0, wy]),
        np.concatenate([yaw0, float(byaw) + lyaw]),
        np.concatenate([s[keep], s_entry + t]),
        np.concatenate([d[keep], np.full(n + 1, np.nan)]),
        np.concatenate([dd[keep], np.full(n + 1, np.nan)]),
    )
