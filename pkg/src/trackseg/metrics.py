"""Confusion-matrix segmentation metrics: per-class IoU and mIoU."""
from __future__ import annotations

import csv
import io
import re

import numpy as np

from .imaging import Raster
from .road_model import ClassMap

__all__ = [
    "ConfusionMatrix", "accumulate", "iou_per_class", "miou", "evaluation_report",
    "parse_report", "iou_csv",
]

NAME_WIDTH = 32


class ConfusionMatrix:
    """``counts[g, p]`` = pixels of ground-truth class ``g`` predicted as ``p``."""

    def __init__(self, n_classes: int, counts=None):
        if n_classes < 1:
            raise ValueError("need at least one class")
        self.n_classes = n_classes
        if counts is None:
            self.counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        else:
            self.counts = np.array(counts, dtype=np.int64)
            if self.counts.shape != (n_classes, n_classes) or (self.counts < 0).any():
                raise ValueError("counts must be a non-negative N x N matrix")

    @property
    def tp(self) -> np.ndarray:
        return np.diag(self.counts)

    @property
    def fp(self) -> np.ndarray:
        return self.counts.sum(axis=0) - self.tp

    @property
    def fn(self) -> np.ndarray:
        return self.counts.sum(axis=1) - self.tp

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        if other.n_classes != self.n_classes:
            raise ValueError("class counts differ")
        return ConfusionMatrix(self.n_classes, self.counts + other.counts)

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def copy(self) -> ConfusionMatrix:
        return ConfusionMatrix(self.n_classes, self.counts.copy())


def accumulate(cm: ConfusionMatrix, prediction: Raster, ground_truth: Raster) -> ConfusionMatrix:
    """Add one image pair to ``cm`` in place and return it."""
    if prediction.shape != ground_truth.shape:
        raise ValueError(
            f"prediction {prediction.width}x{prediction.height} and ground truth "
            f"{ground_truth.width}x{ground_truth.height} differ in size")
    if prediction.channels != 1 or ground_truth.channels != 1:
        raise ValueError("class-id maps must be single channel")
    p = prediction.array().ravel().astype(np.int64)
    g = ground_truth.array().ravel().astype(np.int64)
    n = cm.n_classes
    top = max(int(p.max(initial=0)), int(g.max(initial=0)))
    if top >= n:
        raise ValueError(f"class id {top} outside 0..{n - 1}")
    cm.counts += np.bincount(g * n + p, minlength=n * n).reshape(n, n)
    return cm


def iou_per_class(cm: ConfusionMatrix) -> list[tuple[int, float | None]]:
    """TP / (TP + FP + FN) per class; ``None`` for classes absent from both sides."""
    denom = cm.tp + cm.fp + cm.fn
    return [(c, float(cm.tp[c] / denom[c]) if denom[c] else None) for c in range(cm.n_classes)]


def miou(cm: ConfusionMatrix, exclude=()) -> float:
    """Mean IoU over classes with a defined IoU, skipping ids in ``exclude``."""
    vals = [v for c, v in iou_per_class(cm) if v is not None and c not in exclude]
    if not vals:
        raise ValueError("no class has a defined IoU")
    return sum(vals) / len(vals)


def evaluation_report(cm: ConfusionMatrix, cmap: ClassMap, exclude=()) -> str:
    """Per-class IoU table in percent followed by the mIoU row."""
    ious = dict(iou_per_class(cm))
    lines = [f"{'Class':<{NAME_WIDTH}} {'IoU [%]':>8}", f"{'-' * NAME_WIDTH} {'-' * 8}"]
    notes = []
    for e in cmap.entries:
        if e.id >= cm.n_classes:
            continue
        v = ious[e.id]
        cell = "n/a" if v is None else f"{100 * v:.2f}"
        mark = ""
        if e.id in exclude:
            mark = " *"
        elif v is None:
            mark = " -"
        lines.append(f"{e.name[:NAME_WIDTH]:<{NAME_WIDTH}} {cell:>8}{mark}")
    lines.append(f"{'-' * NAME_WIDTH} {'-' * 8}")
    lines.append(f"{'mIoU':<{NAME_WIDTH}} {100 * miou(cm, exclude):>8.2f}")
    if any(ious[e.id] is None for e in cmap.entries if e.id < cm.n_classes):
        notes.append("- class absent from prediction and ground truth, left out of mIoU")
    if exclude:
        notes.append("* excluded from mIoU")
    return "\n".join(lines + notes) + "\n"


_ROW = re.compile(r"^(?P<name>.{%d}) +(?P<val>n/a|\d+\.\d\d)(?: [*-])?$" % NAME_WIDTH)


def parse_report(text: str) -> dict[str, float | None]:
    """Inverse of :func:`evaluation_report`: name -> percentage (``None`` for n/a)."""
    out = {}
    for line in text.splitlines():
        m = _ROW.match(line)
        if m and not line.startswith("-"):
            name = m.group("name").rstrip()
            val = m.group("val")
            out[name] = None if val == "n/a" else float(val)
    return out


def iou_csv(cm: ConfusionMatrix, cmap: ClassMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class_id", "name", "iou"])
    ious = dict(iou_per_class(cm))
    for e in cmap.entries:
        if e.id < cm.n_classes:
            v = ious[e.id]
            w.writerow([e.id, e.name, "" if v is None else repr(v)])
    return buf.getvalue()
