"""Frame throughput and latency measurement for toolkit stages."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .imaging import Raster

__all__ = ["FpsReport", "BenchmarkError", "benchmark", "resolution_sweep", "percentile",
           "synthetic_frames", "format_table", "reports_csv"]

DEFAULT_WARMUP = 20
DEFAULT_REPETITIONS = 3


class BenchmarkError(RuntimeError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"processor failed on frame {index}: {cause!r}")
        self.index = index


@dataclass(frozen=True)
class FpsReport:
    processor: str
    resolution: tuple[int, int]
    frames: int
    warmup: int
    elapsed: float
    fps: float
    p50_ms: float
    p95_ms: float
    p99_ms: float
    repetitions: int = 1
    latencies_ms: tuple[float, ...] = field(default=(), repr=False, compare=False)


def percentile(values, q: float) -> float:
    """Nearest-rank percentile of ``values`` (``q`` in percent)."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("no values")
    rank = max(1, math.ceil(q / 100 * len(ordered)))
    return ordered[rank - 1]


def _check_clock():
    res = time.get_clock_info("perf_counter").resolution
    if res >= 1e-3:
        raise RuntimeError(f"perf_counter resolution {res} s is not below 1 ms")


def benchmark(processor, frames, warmup: int = DEFAULT_WARMUP, repetitions: int = DEFAULT_REPETITIONS,
              name: str | None = None) -> FpsReport:
    """Time ``processor`` over ``frames``.

    ``warmup`` untimed calls cycle through the frames first; then every frame
    is processed ``repetitions`` times with one latency sample per call.  FPS
    is timed frames over the wall time of the timed loop.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("no frames to benchmark")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    _check_clock()
    clock = time.perf_counter

    def run(i):
        try:
            out = processor(frames[i])
        except Exception as exc:
            raise BenchmarkError(i, exc) from exc
        if out is None:
            raise BenchmarkError(i, ValueError("processor returned None"))

    for k in range(warmup):
        run(k % len(frames))
    latencies = []
    start = clock()
    for _ in range(repetitions):
        for i in range(len(frames)):
            t0 = clock()
            run(i)
            latencies.append((clock() - t0) * 1e3)
    elapsed = clock() - start
    n = len(latencies)
    first = frames[0]
    res = (first.width, first.height) if isinstance(first, Raster) else tuple(np.shape(first)[1::-1])
    return FpsReport(
        processor=name or getattr(processor, "__name__", "processor"),
        resolution=res,
        frames=n,
        warmup=warmup,
        elapsed=elapsed,
        fps=n / elapsed,
        p50_ms=percentile(latencies, 50),
        p95_ms=percentile(latencies, 95),
        p99_ms=percentile(latencies, 99),
        repetitions=repetitions,
        latencies_ms=tuple(latencies),
    )


def synthetic_frames(width: int, height: int, count: int, channels: int = 3, seed: int = 0):
    """Smooth random test images of the given size."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    out = []
    for _ in range(count):
        fx, fy, ph = rng.uniform(0.005, 0.05, 2).tolist() + [rng.uniform(0, 2 * np.pi)]
        base = 127.5 + 127.5 * np.sin(fx * xx + ph) * np.cos(fy * yy)
        if channels == 3:
            base = np.stack([base, base[::-1], 255 - base], axis=2)
        out.append(Raster.from_array(np.floor(base).clip(0, 255).astype(np.uint8)))
    return out


def resolution_sweep(processor, resolutions, frames_per_resolution: int = 20,
                     warmup: int = DEFAULT_WARMUP, repetitions: int = DEFAULT_REPETITIONS,
                     channels: int = 3, name: str | None = None, seed: int = 0) -> list[FpsReport]:
    """One report per ``(width, height)`` on synthetic frames of that size."""
    reports = []
    for w, h in resolutions:
        if w <= 0 or h <= 0:
            raise ValueError(f"invalid resolution {w}x{h}")
        frames = synthetic_frames(w, h, frames_per_resolution, channels, seed)
        reports.append(benchmark(processor, frames, warmup, repetitions, name))
    return reports


def format_table(reports) -> str:
    head = f"{'Processor':<20} {'Resolution':>11} {'Frames':>7} {'FPS':>10} {'p50 ms':>9} {'p95 ms':>9} {'p99 ms':>9}"
    lines = [head, "-" * len(head)]
    for r in reports:
        res = f"{r.resolution[0]} x {r.resolution[1]}"
        lines.append(f"{r.processor:<20} {res:>11} {r.frames:>7} {r.fps:>10.2f} "
                     f"{r.p50_ms:>9.3f} {r.p95_ms:>9.3f} {r.p99_ms:>9.3f}")
    if reports:
        lines.append(f"warmup {reports[0].warmup} frames, {reports[0].repetitions} repetitions")
    return "\n".join(lines) + "\n"


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["processor", "width", "height", "frames", "fps", "p50_ms", "p95_ms", "p99_ms"])
    for r in reports:
        w.writerow([r.processor, r.resolution[0], r.resolution[1], r.frames, repr(r.fps),
                    repr(r.p50_ms), repr(r.p95_ms), repr(r.p99_ms)])
    return buf.getvalue()
