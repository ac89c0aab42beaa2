"""Four-point homographies and perspective warping between camera and bird's-eye views."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .imaging import Raster, sample_bilinear_grid, sample_nearest_grid

__all__ = [
    "Homography", "Correspondences4", "DegenerateCorrespondencesError", "SingularHomographyError",
    "PointAtInfinityError", "estimate_homography", "apply_homography", "invert", "warp_image",
    "read_correspondences", "write_correspondences", "read_homography", "write_homography",
    "solve_linear",
]

W_EPS = 1e-12
AREA_EPS = 1e-9


class DegenerateCorrespondencesError(ValueError):
    pass


class SingularHomographyError(ValueError):
    pass


class PointAtInfinityError(ValueError):
    pass


class Homography:
    """A 3x3 projective matrix, scaled so that ``h33 == 1`` whenever ``h33 != 0``."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise SingularHomographyError("homography has non-finite entries")
        if m[2, 2] != 0:
            m = m / m[2, 2]
        scale = np.max(np.abs(m))
        if scale == 0 or abs(np.linalg.det(m)) <= 1e-12 * scale ** 3:
            raise SingularHomographyError("homography is singular")
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def identity(cls) -> Homography:
        return cls(np.eye(3))

    def __matmul__(self, other: Homography) -> Homography:
        return Homography(self.matrix @ other.matrix)

    def __repr__(self):
        return f"Homography({self.matrix.tolist()!r})"


@dataclass(frozen=True)
class Correspondences4:
    src: tuple[tuple[float, float], ...]
    dst: tuple[tuple[float, float], ...]

    def __post_init__(self):
        src = tuple(tuple(float(c) for c in p) for p in self.src)
        dst = tuple(tuple(float(c) for c in p) for p in self.dst)
        if len(src) != 4 or len(dst) != 4 or any(len(p) != 2 for p in src + dst):
            raise ValueError("exactly four 2-D source and destination points are required")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        for name, pts in (("source", src), ("destination", dst)):
            for a, b, c in combinations(pts, 3):
                area = 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
                if area <= AREA_EPS:
                    raise DegenerateCorrespondencesError(
                        f"degenerate correspondences: {name} points {a}, {b}, {c} are collinear")


def solve_linear(a, b) -> np.ndarray:
    """Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    scale = np.max(np.abs(a)) or 1.0
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) <= 1e-14 * scale:
            raise DegenerateCorrespondencesError("degenerate correspondences: singular system")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        f = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(f, a[col, col:])
        b[col + 1:] -= f * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


def _solve_h33_one(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        a[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        a[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        b[2 * i] = u
        b[2 * i + 1] = v
    return np.append(solve_linear(a, b), 1.0).reshape(3, 3)


def estimate_homography(c: Correspondences4) -> Homography:
    """Exact homography through four point pairs (8x8 system with ``h33 = 1``).

    Points are shifted to their centroids first for conditioning; if the
    source centroid happens to map to infinity (``h33 = 0`` there) the
    unshifted system is solved instead.
    """
    src = np.asarray(c.src)
    dst = np.asarray(c.dst)
    s_mean = src.mean(axis=0)
    d_mean = dst.mean(axis=0)
    try:
        core = _solve_h33_one(src - s_mean, dst - d_mean)
    except DegenerateCorrespondencesError:
        return Homography(_solve_h33_one(src, dst))
    t_src = np.array([[1, 0, -s_mean[0]], [0, 1, -s_mean[1]], [0, 0, 1]])
    t_dst = np.array([[1, 0, d_mean[0]], [0, 1, d_mean[1]], [0, 0, 1]])
    return Homography(t_dst @ core @ t_src)


def apply_homography(h: Homography, p) -> tuple[float, float]:
    x, y = p
    m = h.matrix
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(w) <= W_EPS:
        raise PointAtInfinityError(f"point {p} maps to infinity")
    return ((m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w,
            (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w)


def apply_homography_grid(h: Homography, x, y):
    """Vectorised mapping; points sent to infinity come back as NaN."""
    m = h.matrix
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    bad = np.abs(w) <= W_EPS
    w = np.where(bad, np.nan, w)
    return ((m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w,
            (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w)


def invert(h: Homography) -> Homography:
    return Homography(np.linalg.inv(h.matrix))


def warp_image(src: Raster, h: Homography, out_width: int, out_height: int,
               mode: str = "nearest", fill=0) -> Raster:
    """Inverse-map every output pixel through ``h^-1`` and sample ``src`` there."""
    hinv = invert(h)
    u, v = np.meshgrid(np.arange(out_width, dtype=float), np.arange(out_height, dtype=float))
    su, sv = apply_homography_grid(hinv, u, v)
    if mode == "nearest":
        out = sample_nearest_grid(src.array(), su, sv, fill)
    elif mode == "bilinear":
        out = sample_bilinear_grid(src.array(), su, sv, fill)
    else:
        raise ValueError(f"unknown warp mode {mode!r}")
    return Raster.from_array(out)


# ------------------------------------------------------------ files

def read_correspondences(path) -> Correspondences4:
    """Four lines ``src_u src_v dst_u dst_v``; ``#`` comments allowed."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 numbers")
        rows.append([float(t) for t in parts])
    if len(rows) != 4:
        raise ValueError(f"{path}: expected 4 correspondences, found {len(rows)}")
    return Correspondences4(tuple((r[0], r[1]) for r in rows), tuple((r[2], r[3]) for r in rows))


def write_correspondences(c: Correspondences4, path) -> None:
    lines = [f"{s[0]!r} {s[1]!r} {d[0]!r} {d[1]!r}" for s, d in zip(c.src, c.dst)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_homography(path) -> Homography:
    vals = [float(t) for t in Path(path).read_text(encoding="utf-8").split()]
    if len(vals) != 9:
        raise ValueError(f"{path}: expected 9 numbers, found {len(vals)}")
    return Homography(np.array(vals).reshape(3, 3))


def write_homography(h: Homography, path) -> None:
    rows = [" ".join(repr(float(v)) for v in row) for row in h.matrix]
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")
