"""Colour -> class-id conversion, ROI cropping, size fitting and dataset manifests."""
from __future__ import annotations

import csv
import io
import math
import os
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .bev import Homography, warp_image
from .imaging import Raster, load_raster, resize, save_raster
from .road_model import ClassMap

__all__ = [
    "ColorLookupError", "RoiRect", "ManifestRecord", "DatasetManifest", "color_to_id",
    "id_to_color", "apply_roi", "fit_dims_64", "split_dataset", "convert_dataset_to_bev",
    "check_manifest", "round_half_away_int",
]

PERSPECTIVES = ("first_person", "bird")
SPLITS = ("train", "val", "test", "unassigned")
MANIFEST_HEADER = ["raw_path", "ann_path", "perspective", "split", "source"]


class ColorLookupError(ValueError):
    """Annotation colours missing from the class map (strict policy)."""

    def __init__(self, offenders: list[tuple[tuple[int, int, int], int]], total: int):
        shown = ", ".join(f"{c} x{n}" for c, n in offenders)
        more = f" (+{total - len(offenders)} more)" if total > len(offenders) else ""
        super().__init__(f"colours not in class map: {shown}{more}")
        self.offenders = offenders


def round_half_away_int(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


# ------------------------------------------------------------ per image

def _rgb_keys(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint32)
    return (a[..., 0] << 16) | (a[..., 1] << 8) | a[..., 2]


def color_to_id(annotation_color: Raster, cmap: ClassMap, policy: str = "strict") -> Raster:
    """Replace every colour by its class id using the class-map lookup table.

    ``nearest`` maps unknown colours to the class of minimum Euclidean RGB
    distance, ties to the lower id.
    """
    if annotation_color.channels != 3:
        raise ValueError("color_to_id needs a 3-channel raster")
    if policy not in ("strict", "nearest"):
        raise ValueError(f"unknown policy {policy!r}")
    keys = _rgb_keys(annotation_color.array())
    entries = cmap.entries
    class_keys = np.array([(c[0] << 16) | (c[1] << 8) | c[2] for c in (e.color for e in entries)],
                          dtype=np.uint32)
    class_ids = np.array([e.id for e in entries], dtype=np.uint8)
    order = np.argsort(class_keys)
    sorted_keys = class_keys[order]
    pos = np.clip(np.searchsorted(sorted_keys, keys), 0, len(sorted_keys) - 1)
    known = sorted_keys[pos] == keys
    out = class_ids[order][pos]
    if not known.all():
        unknown, counts = np.unique(keys[~known], return_counts=True)
        if policy == "strict":
            rank = np.lexsort((unknown, -counts))[:10]
            offenders = [(((int(k) >> 16) & 255, (int(k) >> 8) & 255, int(k) & 255), int(n))
                         for k, n in zip(unknown[rank], counts[rank])]
            raise ColorLookupError(offenders, len(unknown))
        rgb = np.stack([(unknown >> 16) & 255, (unknown >> 8) & 255, unknown & 255], axis=1).astype(np.int64)
        colors = np.array([e.color for e in entries], dtype=np.int64)
        dist = ((rgb[:, None, :] - colors[None, :, :]) ** 2).sum(axis=2)
        # entries are sorted by id, so argmin's first-hit rule breaks ties to the lower id
        nearest = class_ids[np.argmin(dist, axis=1)]
        lookup = dict(zip(unknown.tolist(), nearest.tolist()))
        out[~known] = np.array([lookup[k] for k in keys[~known].tolist()], dtype=np.uint8)
    return Raster.from_array(out.astype(np.uint8))


def id_to_color(ids: Raster, cmap: ClassMap) -> Raster:
    if ids.channels != 1:
        raise ValueError("id_to_color needs a 1-channel raster")
    return Raster.from_array(cmap.palette()[ids.array()])


@dataclass(frozen=True)
class RoiRect:
    left: int
    top: int
    width: int
    height: int

    @classmethod
    def parse(cls, text: str) -> RoiRect:
        parts = text.replace(",", " ").split()
        if len(parts) != 4:
            raise ValueError(f"ROI needs 'left top width height', got {text!r}")
        return cls(*(int(p) for p in parts))

    def check(self, width: int, height: int) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"ROI {self} must have positive size")
        if self.left < 0 or self.top < 0 or self.left + self.width > width or self.top + self.height > height:
            raise ValueError(f"ROI {self} exceeds image bounds {width}x{height}")


def apply_roi(r: Raster, roi: RoiRect) -> Raster:
    roi.check(r.width, r.height)
    a = r.array()[roi.top:roi.top + roi.height, roi.left:roi.left + roi.width]
    return Raster.from_array(a)


def fit_dims_64(r: Raster, mode: str = "nearest") -> Raster:
    """Downscale each axis to the largest multiple of 64 not above it."""
    if r.width < 64 or r.height < 64:
        raise ValueError(f"image {r.width}x{r.height} is smaller than 64 px on a side")
    w = r.width - r.width % 64
    h = r.height - r.height % 64
    if (w, h) == (r.width, r.height):
        return r
    return resize(r, w, h, mode)


# ------------------------------------------------------------ manifests

@dataclass(frozen=True)
class ManifestRecord:
    raw_path: str
    ann_path: str
    perspective: str = "first_person"
    split: str = "unassigned"
    source: str = "synthetic"

    def __post_init__(self):
        if self.perspective not in PERSPECTIVES:
            raise ValueError(f"unknown perspective {self.perspective!r}")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ManifestRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        paths = [p for r in self.records for p in (r.raw_path, r.ann_path)]
        dup = [p for p, n in Counter(paths).items() if n > 1]
        if dup:
            raise ValueError(f"duplicate manifest paths: {dup[:5]}")

    def __len__(self):
        return len(self.records)

    def counts(self) -> dict[tuple[str, str], int]:
        """``(source, split) -> number of records``."""
        return dict(Counter((r.source, r.split) for r in self.records))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for r in self.records:
            w.writerow([r.raw_path, r.ann_path, r.perspective, r.split, r.source])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> DatasetManifest:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != MANIFEST_HEADER:
            raise ValueError(f"manifest header must be {','.join(MANIFEST_HEADER)}")
        return cls(tuple(ManifestRecord(**row) for row in reader))

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> DatasetManifest:
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def check_manifest(manifest: DatasetManifest, root) -> list[str]:
    """Missing files or raw/annotation size mismatches, relative to ``root``."""
    root = Path(root)
    out = []
    for r in manifest.records:
        paths = [root / r.raw_path, root / r.ann_path]
        missing = [str(p) for p in paths if not p.is_file()]
        if missing:
            out.extend(f"missing file {p}" for p in missing)
            continue
        a, b = load_raster(paths[0]), load_raster(paths[1])
        if a.shape != b.shape:
            out.append(f"{r.raw_path} is {a.width}x{a.height} but {r.ann_path} is {b.width}x{b.height}")
    return out


def split_dataset(manifest: DatasetManifest, train_fraction: float, seed: int) -> DatasetManifest:
    """Assign ``unassigned`` records to train/val, stratified by source.

    Per source, ``round(train_fraction * n)`` of the shuffled unassigned
    records become train and the rest val.  Other splits are left alone.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    if not manifest.records:
        raise ValueError("cannot split an empty manifest")
    by_source = defaultdict(list)
    for i, r in enumerate(manifest.records):
        if r.split == "unassigned":
            by_source[r.source].append(i)
    new = list(manifest.records)
    for source in sorted(by_source):
        idx = sorted(by_source[source], key=lambda i: (new[i].raw_path, new[i].ann_path))
        random.Random(f"{seed}:{source}").shuffle(idx)
        n_train = round_half_away_int(train_fraction * len(idx))
        for k, i in enumerate(idx):
            new[i] = replace(new[i], split="train" if k < n_train else "val")
    return DatasetManifest(tuple(new))


def convert_dataset_to_bev(manifest: DatasetManifest, homography: Homography, out_width: int,
                           out_height: int, root, out_dir, out_manifest_root=None) -> DatasetManifest:
    """Warp every record into the bird's-eye view.

    Raw images are resampled bilinearly, annotation id maps with nearest
    neighbour.  Outputs keep their relative paths below ``out_dir``; the
    returned manifest is relative to ``out_manifest_root`` (default ``out_dir``).
    """
    if out_width % 64 or out_height % 64 or out_width <= 0 or out_height <= 0:
        raise ValueError(f"BEV output {out_width}x{out_height} must be positive multiples of 64")
    root = Path(root)
    out_dir = Path(out_dir)
    rel_root = Path(out_manifest_root) if out_manifest_root is not None else out_dir
    records = []
    for r in manifest.records:
        raw = load_raster(root / r.raw_path)
        ann = load_raster(root / r.ann_path)
        if ann.channels != 1:
            raise ValueError(f"{r.ann_path}: annotation must be a 1-channel id map")
        raw_out = out_dir / r.raw_path
        ann_out = out_dir / r.ann_path
        save_raster(warp_image(raw, homography, out_width, out_height, "bilinear"), raw_out)
        save_raster(warp_image(ann, homography, out_width, out_height, "nearest"), ann_out)
        records.append(replace(r, raw_path=_rel(raw_out, rel_root), ann_path=_rel(ann_out, rel_root),
                               perspective="bird"))
    return DatasetManifest(tuple(records))


def _rel(path: Path, root: Path) -> str:
    return Path(os.path.relpath(path, root)).as_posix()
