"""Pinhole camera moving over the ground plane: first-person frames from top-down images.

Camera frame convention: x right, y down, z along the optical axis.  The
camera sits ``mount_height`` metres above the vehicle pose, yawed with the
vehicle and pitched down by ``pitch``; there is no roll.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bev import Correspondences4, Homography
from .imaging import Raster, sample_bilinear_grid, sample_nearest_grid, save_raster
from .road_model import Pose2D
from .route_renderer import SURFACE_RGB, TopDownPair, Trajectory

__all__ = [
    "CameraModel", "Frame", "ground_to_image", "backproject", "induced_ground_homography",
    "topdown_similarity", "render_first_person", "record_sequence", "iter_frames",
    "horizon_row", "FRAME_MANIFEST_HEADER", "ground_rectangle_correspondences",
]

HORIZON_EPS = 1e-9
FRAME_MANIFEST_HEADER = ["index", "x_m", "y_m", "yaw_rad", "raw_path", "ann_path"]


@dataclass(frozen=True)
class CameraModel:
    fx: float = 160.0
    fy: float = 160.0
    cx: float = 160.0
    cy: float = 128.0
    out_width: int = 320
    out_height: int = 256
    mount_height: float = 0.25
    pitch: float = math.radians(15.0)

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not 0 <= self.pitch <= math.pi / 2:
            raise ValueError("pitch must lie in [0, pi/2]")
        if self.out_width <= 0 or self.out_height <= 0:
            raise ValueError("output dimensions must be positive")
        if not self.mount_height > 0:
            raise ValueError("mount height must be positive")

    def axes(self, yaw: float):
        """World-frame unit vectors of the camera x, y and z axes."""
        cy_, sy_ = math.cos(yaw), math.sin(yaw)
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        x_axis = np.array([sy_, -cy_, 0.0])
        z_axis = np.array([cp * cy_, cp * sy_, -sp])
        y_axis = np.cross(z_axis, x_axis)
        return x_axis, y_axis, z_axis


def horizon_row(cam: CameraModel) -> float:
    """Image row of the horizon (``-inf`` for a nadir camera)."""
    if cam.pitch >= math.pi / 2:
        return -math.inf
    return cam.cy - cam.fy * math.tan(cam.pitch)


def ground_to_image(cam: CameraModel, pose: Pose2D, p):
    """Project ground point ``p = (x, y)``; ``None`` when behind the image plane."""
    x_axis, y_axis, z_axis = cam.axes(pose[2])
    d = np.array([p[0] - pose[0], p[1] - pose[1], -cam.mount_height])
    zc = float(d @ z_axis)
    if zc <= HORIZON_EPS:
        return None
    return (cam.cx + cam.fx * float(d @ x_axis) / zc, cam.cy + cam.fy * float(d @ y_axis) / zc)


def _rays_to_ground(cam: CameraModel, pose, u, v):
    x_axis, y_axis, z_axis = cam.axes(pose[2])
    xn = (np.asarray(u, dtype=float) - cam.cx) / cam.fx
    yn = (np.asarray(v, dtype=float) - cam.cy) / cam.fy
    rz = xn * x_axis[2] + yn * y_axis[2] + z_axis[2]
    hits = rz < -HORIZON_EPS
    t = np.where(hits, cam.mount_height / np.where(hits, -rz, 1.0), np.nan)
    gx = pose[0] + t * (xn * x_axis[0] + yn * y_axis[0] + z_axis[0])
    gy = pose[1] + t * (xn * x_axis[1] + yn * y_axis[1] + z_axis[1])
    return gx, gy, hits


def backproject(cam: CameraModel, pose: Pose2D, q):
    """Ground point seen at pixel ``q``; ``None`` at or above the horizon."""
    gx, gy, hit = _rays_to_ground(cam, pose, np.array([q[0]]), np.array([q[1]]))
    return (float(gx[0]), float(gy[0])) if hit[0] else None


def induced_ground_homography(cam: CameraModel, pose: Pose2D) -> Homography:
    """Homography taking ground coordinates (metres) to image pixels."""
    x_axis, y_axis, z_axis = cam.axes(pose[2])
    c = np.array([pose[0], pose[1], cam.mount_height])
    rt = np.empty((3, 3))
    for row, ax in enumerate((x_axis, y_axis, z_axis)):
        rt[row] = [ax[0], ax[1], -(ax @ c)]
    k = np.array([[cam.fx, 0.0, cam.cx], [0.0, cam.fy, cam.cy], [0.0, 0.0, 1.0]])
    return Homography(k @ rt)


def topdown_similarity(pair: TopDownPair) -> Homography:
    """Homography taking ground coordinates to top-down pixel coordinates."""
    ox, oy = pair.world_origin
    m = pair.meters_per_pixel
    return Homography([[1 / m, 0, -ox / m], [0, -1 / m, oy / m], [0, 0, 1]])


def ground_rectangle_correspondences(cam: CameraModel, out_width: int, out_height: int,
                                     near: float = 0.45, far: float = 1.6, half_width: float = 0.6,
                                     offset=(0, 0)) -> Correspondences4:
    """Image corners of a ground rectangle ahead of the camera paired with the
    corners of a ``out_width`` x ``out_height`` bird's-eye image.

    ``offset`` is subtracted from the image coordinates (ROI left/top).
    """
    pose = Pose2D(0.0, 0.0, 0.0)
    ground = [(far, half_width), (far, -half_width), (near, -half_width), (near, half_width)]
    dst = [(0, 0), (out_width - 1, 0), (out_width - 1, out_height - 1), (0, out_height - 1)]
    src = []
    for g in ground:
        q = ground_to_image(cam, pose, g)
        if q is None:
            raise ValueError(f"ground point {g} is not visible to the camera")
        src.append((q[0] - offset[0], q[1] - offset[1]))
    return Correspondences4(tuple(src), tuple(dst))


def render_first_person(pair: TopDownPair, cam: CameraModel, pose: Pose2D):
    """Raw and colour-annotation frames seen from ``pose``.

    Each output pixel's ray is intersected with the ground; the raw image is
    sampled bilinearly and the annotation with nearest neighbour.  Pixels at
    or above the horizon, or off the top-down image, get the surface colour
    and class 0's colour respectively.
    """
    u, v = np.meshgrid(np.arange(cam.out_width, dtype=float), np.arange(cam.out_height, dtype=float))
    gx, gy, _ = _rays_to_ground(cam, pose, u, v)
    ox, oy = pair.world_origin
    tu = (gx - ox) / pair.meters_per_pixel
    tv = (oy - gy) / pair.meters_per_pixel
    ann = pair.annotation_color.array()
    # class-0 colour: whatever colour the top-down annotation uses off the road
    background = ann[0, 0]
    raw = sample_bilinear_grid(pair.raw.array(), tu, tv, fill=SURFACE_RGB)
    ann_out = sample_nearest_grid(ann, tu, tv, fill=background)
    return Raster.from_array(raw), Raster.from_array(ann_out)


@dataclass(frozen=True, eq=False)
class Frame:
    index: int
    pose: Pose2D
    raw: Raster
    annotation: Raster


def iter_frames(pair: TopDownPair, cam: CameraModel, traj: Trajectory, stride: int = 1,
                workers: int = 1):
    """Yield frames for every ``stride``-th pose, in pose order."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    poses = traj.poses()[::stride]

    def render(item):
        i, pose = item
        raw, ann = render_first_person(pair, cam, pose)
        return Frame(i, pose, raw, ann)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            yield from pool.map(render, enumerate(poses))
    else:
        yield from map(render, enumerate(poses))


def frame_name(index: int) -> str:
    return f"frame_{index:06d}"


def write_frame_manifest(rows, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FRAME_MANIFEST_HEADER)
    for r in rows:
        w.writerow(r)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_frame_manifest(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def record_sequence(pair: TopDownPair, cam: CameraModel, traj: Trajectory, stride: int = 1,
                    out_dir=None, workers: int = 1):
    """Render synchronized raw/annotation frames and their manifest rows.

    With ``out_dir`` the frames are written as ``raw/frame_NNNNNN.ppm`` and
    ``ann/frame_NNNNNN.ppm`` plus ``frames.csv``.
    """
    frames = list(iter_frames(pair, cam, traj, stride, workers))
    rows = []
    for f in frames:
        name = frame_name(f.index)
        raw_path, ann_path = f"raw/{name}.ppm", f"ann/{name}.ppm"
        rows.append([f.index, repr(f.pose.x), repr(f.pose.y), repr(f.pose.yaw), raw_path, ann_path])
        if out_dir is not None:
            save_raster(f.raw, Path(out_dir) / raw_path)
            save_raster(f.annotation, Path(out_dir) / ann_path)
    if out_dir is not None:
        write_frame_manifest(rows, Path(out_dir) / "frames.csv")
    return frames, rows
