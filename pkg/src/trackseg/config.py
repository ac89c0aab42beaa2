"""Pipeline configuration file (same ``key = value`` syntax as layouts)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .annotation_pipeline import RoiRect
from .camera_sim import CameraModel
from .route_renderer import ManeuverSpec, parse_maneuver

__all__ = ["PipelineConfig", "parse_config", "load_config", "ConfigError"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    layout: Path | None = None
    class_map: Path | None = None
    out: Path | None = None
    camera: CameraModel = field(default_factory=CameraModel)
    roi: RoiRect | None = None
    correspondences: Path | None = None
    homography: Path | None = None
    bev_width: int = 320
    bev_height: int = 256
    train_fraction: float = 0.75
    seed: int = 0
    stride: int = 1
    spacing: float = 0.05
    max_frames: int | None = None
    workers: int = 1
    source: str = "synthetic"
    maneuvers: tuple[ManeuverSpec, ...] = ()

    def check(self) -> None:
        for name in ("layout", "class_map", "correspondences", "homography"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{name} file {p} does not exist")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.spacing <= 0:
            raise ConfigError("spacing must be positive")


_CAMERA_KEYS = {
    "camera_fx": ("fx", float), "camera_fy": ("fy", float), "camera_cx": ("cx", float),
    "camera_cy": ("cy", float), "camera_width": ("out_width", int),
    "camera_height": ("out_height", int), "camera_mount_height": ("mount_height", float),
    "camera_pitch_deg": ("pitch", lambda v: math.radians(float(v))),
}
_PATH_KEYS = ("layout", "class_map", "out", "correspondences", "homography")
_SCALAR_KEYS = {
    "bev_width": int, "bev_height": int, "train_fraction": float, "seed": int, "stride": int,
    "spacing": float, "max_frames": int, "workers": int, "source": str,
}


def parse_config(text: str, base_dir=None) -> PipelineConfig:
    base = Path(base_dir) if base_dir is not None else None
    kw: dict = {}
    cam: dict = {}
    maneuvers = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == "maneuver":
                maneuvers.append(parse_maneuver(tokens[1:]))
                continue
            if "=" not in line:
                raise ConfigError(f"cannot parse {line!r}")
            key, value = (p.strip() for p in line.split("=", 1))
            if key in _PATH_KEYS:
                p = Path(value)
                kw[key] = base / p if base is not None and not p.is_absolute() else p
            elif key in _CAMERA_KEYS:
                name, conv = _CAMERA_KEYS[key]
                cam[name] = conv(value)
            elif key == "roi":
                kw["roi"] = RoiRect.parse(value)
            elif key in _SCALAR_KEYS:
                kw[key] = _SCALAR_KEYS[key](value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    try:
        camera = replace(CameraModel(), **cam)
    except ValueError as exc:
        raise ConfigError(f"camera: {exc}") from None
    return PipelineConfig(camera=camera, maneuvers=tuple(maneuvers), **kw)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
