import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trackseg import camera_sim as cs
from trackseg import road_model as rm
from trackseg import route_renderer as rr
from trackseg.bev import apply_homography, invert, warp_image
from trackseg.road_model import Pose2D

CAM = cs.CameraModel()


def test_closed_form_projection():
    # forward point on the optical-axis plane: the pixel row follows from the
    # depression angle alone, the column is the principal point
    h, p = 0.25, math.radians(15)
    u, v = cs.ground_to_image(CAM, Pose2D(0, 0, 0), (1.0, 0.0))
    assert u == pytest.approx(160.0, abs=1e-9)
    assert v == pytest.approx(128 + 160 * math.tan(math.atan2(h, 1.0) - p), abs=1e-9)


def test_closed_form_lateral_point():
    h, p = 0.25, math.radians(15)
    X, Y = 1.2, 0.3
    depth = X * math.cos(p) + h * math.sin(p)
    down = h * math.cos(p) - X * math.sin(p)
    u, v = cs.ground_to_image(CAM, Pose2D(0, 0, 0), (X, Y))
    assert u == pytest.approx(160 - 160 * Y / depth, abs=1e-9)
    assert v == pytest.approx(128 + 160 * down / depth, abs=1e-9)


def test_nadir_point_below():
    cam = cs.CameraModel(pitch=math.pi / 2)
    assert cs.ground_to_image(cam, Pose2D(0.3, -0.2, 1.0), (0.3, -0.2)) == pytest.approx((160, 128))
    assert cs.horizon_row(cam) == -math.inf


def test_level_camera_ground_below_centre():
    cam = cs.CameraModel(pitch=0.0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        q = cs.ground_to_image(cam, Pose2D(0, 0, 0), (rng.uniform(0.1, 5), rng.uniform(-3, 3)))
        assert q[1] > cam.cy


def test_behind_camera_not_visible():
    assert cs.ground_to_image(CAM, Pose2D(0, 0, 0), (-1.0, 0.0)) is None


def test_nadir_homography_is_similarity():
    cam = cs.CameraModel(pitch=math.pi / 2)
    H = cs.induced_ground_homography(cam, Pose2D(0, 0, 0)).matrix
    # forward (+x) maps to image up, left (+y) to image left
    expected = np.array([[0, -160 / 0.25, 160], [-160 / 0.25, 0, 128], [0, 0, 1]])
    assert np.allclose(H, expected, atol=1e-9)


@settings(max_examples=40)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-math.pi, math.pi), st.floats(0.05, 1.5))
def test_homography_matches_projection(px, py, yaw, pitch):
    cam = cs.CameraModel(pitch=pitch)
    pose = Pose2D(px, py, yaw)
    H = cs.induced_ground_homography(cam, pose)
    rng = np.random.default_rng(int(abs(px) * 1000))
    for _ in range(8):
        r, a = rng.uniform(0.3, 3), rng.uniform(-1, 1)
        g = (px + r * math.cos(yaw + a), py + r * math.sin(yaw + a))
        q = cs.ground_to_image(cam, pose, g)
        if q is None:
            continue
        assert np.allclose(apply_homography(H, g), q, atol=1e-6)
        back = cs.backproject(cam, pose, q)
        assert np.allclose(back, g, atol=1e-6)
        assert np.allclose(apply_homography(invert(H), q), g, atol=1e-6)


def test_above_horizon_is_class_zero(default_pair, default_layout):
    pose = rr.generate_trajectory(default_layout).poses()[10]
    _, ann = cs.render_first_person(default_pair, CAM, pose)
    bg = default_layout.class_map.color_of(0)
    rows = int(math.floor(cs.horizon_row(CAM)))
    assert (ann.array()[:rows + 1] == bg).all()


def test_annotation_classes_closed(default_pair, default_layout):
    allowed = {tuple(c) for c in np.unique(default_pair.annotation_color.array().reshape(-1, 3), axis=0)}
    allowed.add(default_layout.class_map.color_of(0))
    for pose in rr.generate_trajectory(default_layout).poses()[::40]:
        raw, ann = cs.render_first_person(default_pair, CAM, pose)
        assert raw.shape == ann.shape == (320, 256)
        got = {tuple(c) for c in np.unique(ann.array().reshape(-1, 3), axis=0)}
        assert got <= allowed


def test_stop_line_band_rows():
    lay = rm.parse_layout("segment straight length_m=2 stop_line=yes center=missing\nsegment straight length_m=1")
    pair = rr.render_topdown(lay)
    pose = Pose2D(2.0 - 0.04 - 0.5, -0.2, 0.0)
    _, ann = cs.render_first_person(pair, CAM, pose)
    colour = np.array(lay.class_map.color_of(rm.DEFAULT_CLASS_MAP.id_of("stop line")))
    col = (ann.array()[:, 160] == colour).all(axis=1)
    rows = np.nonzero(col)[0]
    assert len(rows) > 0
    assert np.all(np.diff(rows) == 1)
    # the painted band covers whole 5 mm top-down pixels whose centres lie in
    # [1.96, 2.0), so its outer edges sit half a pixel inside those bounds
    half = pair.meters_per_pixel / 2
    _, v_far = cs.ground_to_image(CAM, pose, (2.0 - half, -0.2))
    _, v_near = cs.ground_to_image(CAM, pose, (1.96 - half, -0.2))
    assert abs(rows.min() - v_far) <= 1
    assert abs(rows.max() - v_near) <= 1


def test_render_matches_warp(default_pair, default_layout):
    S = cs.topdown_similarity(default_pair)
    poses = rr.generate_trajectory(default_layout).poses()
    for pose in poses[::60]:
        H = cs.induced_ground_homography(CAM, pose) @ invert(S)
        warped = warp_image(default_pair.annotation_color, H, CAM.out_width, CAM.out_height,
                            "nearest", fill=default_layout.class_map.color_of(0))
        _, ann = cs.render_first_person(default_pair, CAM, pose)
        below = int(math.floor(cs.horizon_row(CAM))) + 1
        a, b = ann.array()[below:], warped.array()[below:]
        mismatch = np.any(a != b, axis=2).mean()
        assert mismatch <= 0.005


def test_record_sequence(tmp_path, default_pair, default_layout):
    t = rr.generate_trajectory(default_layout)
    short = rr.Trajectory(t.x[:10], t.y[:10], t.yaw[:10])
    frames, rows = cs.record_sequence(default_pair, CAM, short, stride=2, out_dir=tmp_path / "a")
    assert len(frames) == 5
    assert [r[4] for r in rows] == [f"raw/frame_{i:06d}.ppm" for i in range(5)]
    for f, k in zip(frames, range(0, 10, 2)):
        assert f.pose == short.poses()[k]
    manifest = cs.read_frame_manifest(tmp_path / "a" / "frames.csv")
    assert list(manifest[0]) == cs.FRAME_MANIFEST_HEADER
    assert float(manifest[3]["x_m"]) == short.x[6]
    cs.record_sequence(default_pair, CAM, short, stride=2, out_dir=tmp_path / "b", workers=3)
    for name in ("frames.csv", "raw/frame_000004.ppm", "ann/frame_000002.ppm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_trajectory_rejected(default_pair):
    with pytest.raises(ValueError):
        cs.record_sequence(default_pair, CAM, rr.Trajectory([], [], []))


@pytest.mark.parametrize("kw", [dict(fx=0), dict(pitch=-0.1), dict(pitch=2.0), dict(out_width=0)])
def test_camera_invariants(kw):
    with pytest.raises(ValueError):
        cs.CameraModel(**kw)
