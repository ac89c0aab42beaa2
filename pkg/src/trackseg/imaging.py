"""Raster container, binary netpbm codec and resampling primitives.

Pixel (0, 0) is the top-left corner and rows grow downward.  Continuous pixel
coordinates put integer values on pixel centres, so ``(u, v) = (2.0, 3.0)``
is exactly column 2, row 3.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Raster",
    "RasterFormatError",
    "round_half_away",
    "read_raster",
    "write_raster",
    "load_raster",
    "save_raster",
    "sample_nearest",
    "sample_bilinear",
    "sample_nearest_grid",
    "sample_bilinear_grid",
    "resize",
]


class RasterFormatError(ValueError):
    """Malformed netpbm stream.  ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


@dataclass(frozen=True, eq=False)
class Raster:
    width: int
    height: int
    channels: int
    data: bytes

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"raster dimensions must be positive, got {self.width}x{self.height}")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if not isinstance(self.data, bytes):
            object.__setattr__(self, "data", bytes(self.data))
        expected = self.width * self.height * self.channels
        if len(self.data) != expected:
            raise ValueError(f"data length {len(self.data)} != {expected}")

    @classmethod
    def from_array(cls, arr) -> Raster:
        """Build from an ``(h, w)`` or ``(h, w, 3)`` array of values in [0, 255]."""
        a = np.asarray(arr)
        if a.ndim == 2:
            channels = 1
        elif a.ndim == 3 and a.shape[2] in (1, 3):
            channels = a.shape[2]
        else:
            raise ValueError(f"unsupported array shape {a.shape}")
        if a.dtype != np.uint8:
            if a.size and (a.min() < 0 or a.max() > 255):
                raise ValueError("array values outside [0, 255]")
            a = a.astype(np.uint8)
        return cls(a.shape[1], a.shape[0], channels, np.ascontiguousarray(a).tobytes())

    @classmethod
    def filled(cls, width: int, height: int, value) -> Raster:
        if np.ndim(value) == 0:
            return cls.from_array(np.full((height, width), value, dtype=np.uint8))
        return cls.from_array(np.broadcast_to(np.asarray(value, dtype=np.uint8), (height, width, 3)))

    def array(self) -> np.ndarray:
        """Read-only ``(h, w)`` view for gray rasters, ``(h, w, 3)`` for RGB."""
        a = np.frombuffer(self.data, dtype=np.uint8)
        if self.channels == 1:
            return a.reshape(self.height, self.width)
        return a.reshape(self.height, self.width, 3)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.width, self.height)

    def pixel(self, x: int, y: int):
        a = self.array()[y, x]
        return int(a) if self.channels == 1 else tuple(int(c) for c in a)

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return (self.width, self.height, self.channels, self.data) == (
            other.width, other.height, other.channels, other.data)

    def __hash__(self):
        return hash((self.width, self.height, self.channels, self.data))

    def __repr__(self):
        return f"Raster({self.width}x{self.height}x{self.channels})"


def round_half_away(x):
    """Round to the nearest integer, ties away from zero (scalar or array)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


# ---------------------------------------------------------------- codec

_WHITESPACE = b" \t\r\n\v\f"


def _header_tokens(buf: bytes, count: int):
    """Return ``count`` header tokens after the magic and the payload offset."""
    tokens = []
    pos = 2
    n = len(buf)
    while len(tokens) < count:
        if pos >= n:
            raise RasterFormatError("truncated header", pos)
        ch = buf[pos:pos + 1]
        if ch in _WHITESPACE:
            pos += 1
        elif ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            start = pos
            while pos < n and buf[pos:pos + 1] not in _WHITESPACE and buf[pos:pos + 1] != b"#":
                pos += 1
            tok = buf[start:pos]
            if not tok.isdigit():
                raise RasterFormatError(f"non-numeric header field {tok!r}", start)
            tokens.append((int(tok), start))
    # exactly one whitespace byte separates the header from the payload
    if pos >= n or buf[pos:pos + 1] not in _WHITESPACE:
        raise RasterFormatError("missing whitespace before payload", pos)
    return tokens, pos + 1


def read_raster(buf: bytes) -> Raster:
    """Decode a binary P5 (gray) or P6 (RGB) stream with maxval 255."""
    buf = bytes(buf)
    magic = buf[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise RasterFormatError(f"bad magic number {magic!r}", 0)
    fields, start = _header_tokens(buf, 3)
    (width, w_off), (height, h_off), (maxval, m_off) = fields
    if width <= 0:
        raise RasterFormatError("width must be positive", w_off)
    if height <= 0:
        raise RasterFormatError("height must be positive", h_off)
    if maxval != 255:
        raise RasterFormatError(f"unsupported maxval {maxval}", m_off)
    size = width * height * channels
    payload = buf[start:start + size]
    if len(payload) < size:
        raise RasterFormatError(
            f"truncated payload: expected {size} bytes, got {len(payload)}", start + len(payload))
    return Raster(width, height, channels, payload)


def write_raster(r: Raster) -> bytes:
    magic = b"P5" if r.channels == 1 else b"P6"
    return magic + f"\n{r.width} {r.height}\n255\n".encode("ascii") + r.data


def load_raster(path) -> Raster:
    return read_raster(Path(path).read_bytes())


def save_raster(r: Raster, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_raster(r))


# ------------------------------------------------------------ sampling

def _fill_value(r: Raster, fill):
    if r.channels == 1:
        return int(np.asarray(fill).flat[0]) if np.ndim(fill) else int(fill)
    return tuple(int(c) for c in np.broadcast_to(np.asarray(fill), (3,)))


def sample_nearest(r: Raster, u: float, v: float, fill=0):
    """Value of the pixel nearest to ``(u, v)``; ``fill`` when outside."""
    out = sample_nearest_grid(r.array(), np.array([u], float), np.array([v], float), fill)
    return int(out[0]) if r.channels == 1 else tuple(int(c) for c in out[0])


def sample_bilinear(r: Raster, u: float, v: float, fill=0):
    """Bilinear blend of the four neighbours of ``(u, v)``, rounded to an integer.

    Points whose nearest pixel lies outside the raster return ``fill``; for
    points inside the outer half-pixel border the neighbour indices are clamped.
    """
    out = sample_bilinear_grid(r.array(), np.array([u], float), np.array([v], float), fill)
    return int(out[0]) if r.channels == 1 else tuple(int(c) for c in out[0])


def _inside(shape, u, v):
    h, w = shape[:2]
    iu = round_half_away(u)
    iv = round_half_away(v)
    ok = np.isfinite(u) & np.isfinite(v) & (iu >= 0) & (iu < w) & (iv >= 0) & (iv < h)
    return ok, iu, iv


def sample_nearest_grid(a: np.ndarray, u, v, fill=0) -> np.ndarray:
    """Vectorised nearest-neighbour lookup of ``a`` at arrays ``u``, ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    ok, iu, iv = _inside(a.shape, u, v)
    out = np.empty(u.shape + a.shape[2:], dtype=np.uint8)
    out[...] = np.asarray(fill, dtype=np.uint8)
    out[ok] = a[iv[ok].astype(np.intp), iu[ok].astype(np.intp)]
    return out


def sample_bilinear_grid(a: np.ndarray, u, v, fill=0) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    h, w = a.shape[:2]
    ok, _, _ = _inside(a.shape, u, v)
    out = np.empty(u.shape + a.shape[2:], dtype=np.uint8)
    out[...] = np.asarray(fill, dtype=np.uint8)
    uu = np.clip(u[ok], 0.0, w - 1)
    vv = np.clip(v[ok], 0.0, h - 1)
    x0 = np.floor(uu).astype(np.intp)
    y0 = np.floor(vv).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = uu - x0
    fy = vv - y0
    flat = a.reshape(h * w, -1)
    fx = fx[:, None]
    fy = fy[:, None]
    r0 = y0 * w
    r1 = y1 * w
    top = np.take(flat, r0 + x0, axis=0) * (1 - fx)
    top += np.take(flat, r0 + x1, axis=0) * fx
    bottom = np.take(flat, r1 + x0, axis=0) * (1 - fx)
    bottom += np.take(flat, r1 + x1, axis=0) * fx
    val = top * (1 - fy)
    val += bottom * fy
    if a.ndim == 2:
        val = val[:, 0]
    out[ok] = np.clip(np.floor(val + 0.5), 0, 255).astype(np.uint8)
    return out


def resize(r: Raster, width: int, height: int, mode: str = "nearest") -> Raster:
    """Resample to ``width`` x ``height`` with pixel-centre alignment."""
    if (width, height) == (r.width, r.height):
        return r
    sx = r.width / width
    sy = r.height / height
    u = (np.arange(width) + 0.5) * sx - 0.5
    v = (np.arange(height) + 0.5) * sy - 0.5
    uu, vv = np.meshgrid(u, v)
    if mode == "nearest":
        # clamp so that the half-pixel border never falls outside
        uu = np.clip(uu, 0, r.width - 1)
        vv = np.clip(vv, 0, r.height - 1)
        out = sample_nearest_grid(r.array(), uu, vv)
    elif mode == "bilinear":
        out = sample_bilinear_grid(r.array(), uu, vv)
    else:
        raise ValueError(f"unknown resampling mode {mode!r}")
    return Raster.from_array(out)
