import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trackseg import bev
from trackseg.bench import synthetic_frames
from trackseg.imaging import Raster

SQUARE = ((0, 0), (1, 0), (1, 1), (0, 1))
TRAPEZOID = ((0, 0), (1, 0), (0.8, 1), (0.2, 1))


def reference_h(src, dst):
    """Independent solve of the 8x8 system with numpy's LAPACK-backed solver."""
    a, b = [], []
    for (x, y), (u, v) in zip(src, dst):
        a.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        a.append([0, 0, 0, x, y, 1, -v * x, -v * y])
        b += [u, v]
    return np.append(np.linalg.solve(np.array(a, float), np.array(b, float)), 1).reshape(3, 3)


def random_quad(rng, size):
    base = np.array(SQUARE, float)
    return base * size + rng.uniform(-0.3, 0.3, (4, 2)) * size + rng.uniform(-size, size, 2)


def test_identity_and_scale():
    h = bev.estimate_homography(bev.Correspondences4(SQUARE, SQUARE))
    assert np.allclose(h.matrix, np.eye(3), atol=1e-12)
    h2 = bev.estimate_homography(bev.Correspondences4(SQUARE, [(2 * x, 2 * y) for x, y in SQUARE]))
    assert np.allclose(h2.matrix, np.diag([2, 2, 1]), atol=1e-12)
    assert bev.apply_homography(bev.Homography(np.diag([2, 2, 1])), (3, 4)) == (6, 8)
    assert bev.apply_homography(bev.Homography.identity(), (3.5, -1)) == (3.5, -1)


def test_trapezoid_against_reference():
    h = bev.estimate_homography(bev.Correspondences4(SQUARE, TRAPEZOID))
    ref = reference_h(SQUARE, TRAPEZOID)
    assert np.allclose(h.matrix, ref, atol=1e-12)
    p = ref @ [0.5, 0.5, 1]
    assert np.allclose(bev.apply_homography(h, (0.5, 0.5)), p[:2] / p[2], atol=1e-12)


def test_random_closure_and_inverse():
    rng = np.random.default_rng(2024)
    for _ in range(300):
        src = random_quad(rng, rng.uniform(50, 1000))
        dst = random_quad(rng, rng.uniform(50, 1000))
        h = bev.estimate_homography(bev.Correspondences4(src, dst))
        for s, d in zip(src, dst):
            assert np.abs(np.subtract(bev.apply_homography(h, s), d)).max() < 1e-9
        ref = reference_h(src, dst)
        assert np.allclose(h.matrix, ref, rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize("src", [
    ((0, 0), (1, 1), (2, 2), (0, 1)),
    ((0, 0), (0, 0), (1, 0), (0, 1)),
])
def test_degenerate_rejected(src):
    with pytest.raises(bev.DegenerateCorrespondencesError, match="degenerate correspondences"):
        bev.estimate_homography(bev.Correspondences4(src, SQUARE))
    with pytest.raises(bev.DegenerateCorrespondencesError):
        bev.Correspondences4(SQUARE, src)


def test_invert_examples():
    assert np.allclose(bev.invert(bev.Homography.identity()).matrix, np.eye(3))
    assert np.allclose(bev.invert(bev.Homography(np.diag([2, 2, 1]))).matrix, np.diag([0.5, 0.5, 1]))
    with pytest.raises(bev.SingularHomographyError):
        bev.Homography([[1, 2, 3], [2, 4, 6], [0, 0, 1]])


def test_invert_property_1000_seeds():
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        m = np.eye(3) + rng.uniform(-0.4, 0.4, (3, 3))
        h = bev.Homography(m)
        prod = (h @ bev.invert(h)).matrix
        assert np.abs(prod - np.eye(3)).max() < 1e-9


def test_point_at_infinity():
    h = bev.Homography([[1, 0, 0], [0, 1, 0], [1, 0, 1]])
    with pytest.raises(bev.PointAtInfinityError):
        bev.apply_homography(h, (-1.0, 0.0))
    x, y = bev.apply_homography_grid(h, np.array([-1.0, 1.0]), np.array([0.0, 0.0]))
    assert np.isnan(x[0]) and x[1] == 0.5


@settings(max_examples=100)
@given(st.floats(0.01, 100) | st.floats(-100, -0.01), st.floats(-50, 50), st.floats(-50, 50))
def test_projective_scale_invariance(s, x, y):
    m = np.array([[1.1, 0.2, 3], [-0.1, 0.9, 1], [0.001, 0.002, 1]])
    a = bev.apply_homography(bev.Homography(m), (x, y))
    b = bev.apply_homography(bev.Homography(s * m), (x, y))
    assert np.allclose(a, b, rtol=1e-12, atol=1e-9)


def test_warp_identity_and_translation():
    img = synthetic_frames(40, 30, 1, 3, seed=1)[0]
    assert bev.warp_image(img, bev.Homography.identity(), 40, 30, "bilinear") == img
    t = bev.Homography([[1, 0, 3], [0, 1, -2], [0, 0, 1]])
    out = bev.warp_image(img, t, 40, 30, "nearest").array()
    a = img.array()
    assert np.array_equal(out[0:28, 3:40], a[2:30, 0:37])
    assert (out[:, :3] == 0).all() and (out[28:] == 0).all()


def test_warp_round_trip_smooth():
    img = synthetic_frames(120, 100, 1, 1, seed=4)[0]
    h = bev.estimate_homography(bev.Correspondences4(
        ((0, 0), (119, 0), (119, 99), (0, 99)), ((10, 5), (110, 0), (119, 99), (0, 95))))
    back = bev.warp_image(bev.warp_image(img, h, 120, 100, "bilinear"), bev.invert(h), 120, 100, "bilinear")
    diff = np.abs(back.array().astype(int) - img.array().astype(int))[15:-15, 15:-15]
    assert diff.max() <= 2


def test_warp_nearest_keeps_classes():
    rng = np.random.default_rng(0)
    ids = Raster.from_array(rng.choice([1, 4, 9], size=(50, 60)).astype(np.uint8))
    h = bev.Homography([[0.9, 0.1, 2], [-0.05, 1.1, 1], [0.001, 0.0005, 1]])
    out = bev.warp_image(ids, h, 64, 64, "nearest", fill=0)
    assert set(np.unique(out.array())) <= {0, 1, 4, 9}


def test_file_round_trips(tmp_path):
    c = bev.Correspondences4(SQUARE, TRAPEZOID)
    bev.write_correspondences(c, tmp_path / "c.txt")
    assert bev.read_correspondences(tmp_path / "c.txt") == c
    h = bev.estimate_homography(c)
    bev.write_homography(h, tmp_path / "h.txt")
    assert np.array_equal(bev.read_homography(tmp_path / "h.txt").matrix, h.matrix)
    (tmp_path / "bad.txt").write_text("1 2 3\n")
    with pytest.raises(ValueError):
        bev.read_correspondences(tmp_path / "bad.txt")
