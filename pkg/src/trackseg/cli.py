"""Command-line entry point: gen-layout, render, simulate, bev, split, eval, bench.

Exit codes: 0 success, 1 runtime failure, 2 invalid input or configuration.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import annotation_pipeline as ap
from . import bench as bn
from . import bev
from . import camera_sim as cs
from . import metrics as mt
from . import road_model as rm
from . import route_renderer as rr
from .config import ConfigError, PipelineConfig, load_config
from .imaging import load_raster, save_raster

log = logging.getLogger("trackseg")


class UsageError(Exception):
    """Invalid input; maps to exit code 2."""


# ------------------------------------------------------------ helpers

def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out=Path(args.out))
    return cfg


def _load_layout(path, class_map=None) -> rm.RouteLayout:
    layout = rm.load_layout(path)
    if class_map is not None:
        cmap = rm.parse_class_map(Path(class_map).read_text(encoding="utf-8"))
        layout = replace(layout, class_map=cmap)
    return layout


def _trajectory(layout, cfg: PipelineConfig) -> rr.Trajectory:
    traj = rr.generate_trajectory(layout, cfg.spacing)
    for m in cfg.maneuvers:
        traj = rr.insert_maneuver(traj, m, layout)
    return traj


def _parse_resolution(text: str) -> tuple[int, int]:
    w, _, h = text.lower().partition("x")
    return int(w), int(h)


def _out_dir(cfg: PipelineConfig) -> Path:
    if cfg.out is None:
        raise UsageError("an output directory is required (--out or 'out =' in the config)")
    return Path(cfg.out)


# ------------------------------------------------------------ commands

def cmd_gen_layout(args) -> int:
    cfg = _config(args)
    kinds = tuple(args.kinds.split(",")) if args.kinds else rm.SEGMENT_KINDS
    kw = dict(min_segments=args.min_segments, max_segments=args.max_segments, kinds=kinds,
              closed=args.closed)
    if args.radius_range:
        kw["radius_range"] = tuple(args.radius_range)
    if args.angle_range_deg:
        kw["angle_range"] = tuple(math.radians(a) for a in args.angle_range_deg)
    if args.length_range:
        kw["length_range"] = tuple(args.length_range)
    try:
        layout = rm.random_layout(cfg.seed, rm.LayoutConstraints(**kw))
    except rm.LayoutConstraintError as exc:
        raise UsageError(str(exc)) from None
    text = rm.format_layout(layout)
    target = args.output or (Path(cfg.out) / "route.layout" if cfg.out else None)
    if target is None:
        sys.stdout.write(text)
    else:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_text(text, encoding="utf-8")
        log.info("wrote %s (%d segments)", target, len(layout.segments))
    return 0


def cmd_render(args) -> int:
    cfg = _config(args)
    layout_path = args.layout or cfg.layout
    if layout_path is None:
        raise UsageError("render needs a layout file")
    layout = _load_layout(layout_path, cfg.class_map)
    out = _out_dir(cfg)
    pair = rr.render_topdown(layout)
    save_raster(pair.raw, out / "topdown_raw.ppm")
    save_raster(pair.annotation_color, out / "topdown_ann_color.ppm")
    save_raster(pair.annotation_id, out / "topdown_ann_id.pgm")
    _trajectory(layout, cfg).save(out / "trajectory.csv")
    log.info("rendered %dx%d top-down images into %s", pair.width, pair.height, out)
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if args.layout:
        cfg = replace(cfg, layout=Path(args.layout))
    if args.roi:
        cfg = replace(cfg, roi=ap.RoiRect.parse(args.roi))
    if args.stride is not None:
        cfg = replace(cfg, stride=args.stride)
    if args.max_frames is not None:
        cfg = replace(cfg, max_frames=args.max_frames)
    cfg.check()
    if cfg.layout is None:
        raise UsageError("simulate needs a layout ('layout =' in the config or --layout)")
    if cfg.roi is None:
        raise UsageError("simulate needs a region of interest ('roi = left top width height')")
    cfg.roi.check(cfg.camera.out_width, cfg.camera.out_height)
    out = _out_dir(cfg)
    layout = _load_layout(cfg.layout, cfg.class_map)
    pair = rr.render_topdown(layout)
    traj = _trajectory(layout, cfg)
    if cfg.max_frames is not None:
        keep = cfg.max_frames * cfg.stride
        traj = rr.Trajectory(traj.x[:keep], traj.y[:keep], traj.yaw[:keep], traj.s[:keep],
                             traj.offset[:keep], traj.offset_rate[:keep])
    frame_rows = []
    records = []
    for f in cs.iter_frames(pair, cfg.camera, traj, cfg.stride, cfg.workers):
        ids = ap.color_to_id(f.annotation, layout.class_map, "strict")
        raw = ap.fit_dims_64(ap.apply_roi(f.raw, cfg.roi), "bilinear")
        ids = ap.fit_dims_64(ap.apply_roi(ids, cfg.roi), "nearest")
        name = cs.frame_name(f.index)
        raw_rel, ann_rel = f"dataset/raw/{name}.ppm", f"dataset/ann/{name}.pgm"
        save_raster(raw, out / raw_rel)
        save_raster(ids, out / ann_rel)
        frame_rows.append([f.index, repr(f.pose.x), repr(f.pose.y), repr(f.pose.yaw), raw_rel, ann_rel])
        records.append(ap.ManifestRecord(raw_rel, ann_rel, "first_person", "unassigned", cfg.source))
    cs.write_frame_manifest(frame_rows, out / "frames.csv")
    ap.DatasetManifest(tuple(records)).save(out / "manifest.csv")
    traj.save(out / "trajectory.csv")
    log.info("simulated %d frames into %s", len(records), out)
    return 0


def cmd_bev(args) -> int:
    cfg = _config(args)
    corr = args.correspondences or cfg.correspondences
    hom = args.homography or cfg.homography
    if (corr is None) == (hom is None):
        raise UsageError("bev needs exactly one of --correspondences or --homography")
    h = bev.estimate_homography(bev.read_correspondences(corr)) if corr else bev.read_homography(hom)
    width = args.width or cfg.bev_width
    height = args.height or cfg.bev_height
    out = _out_dir(cfg)
    manifest_path = Path(args.manifest)
    manifest = ap.DatasetManifest.load(manifest_path)
    converted = ap.convert_dataset_to_bev(manifest, h, width, height, manifest_path.parent, out)
    converted.save(out / "manifest.csv")
    bev.write_homography(h, out / "homography.txt")
    log.info("converted %d records to bird's-eye view in %s", len(converted), out)
    return 0


def cmd_split(args) -> int:
    cfg = _config(args)
    fraction = args.fraction if args.fraction is not None else cfg.train_fraction
    path = Path(args.manifest)
    manifest = ap.split_dataset(ap.DatasetManifest.load(path), fraction, cfg.seed)
    target = Path(args.output) if args.output else path
    manifest.save(target)
    for (source, split), n in sorted(manifest.counts().items()):
        log.info("%s %s: %d", source, split, n)
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    class_map_path = args.class_map or cfg.class_map
    cmap = (rm.parse_class_map(Path(class_map_path).read_text(encoding="utf-8"))
            if class_map_path else rm.DEFAULT_CLASS_MAP)
    manifest_path = Path(args.manifest)
    manifest = ap.DatasetManifest.load(manifest_path)
    records = [r for r in manifest.records if args.split is None or r.split == args.split]
    if not records:
        raise UsageError("no manifest records to evaluate")
    cm = mt.ConfusionMatrix(max(cmap.ids) + 1)
    pred_dir = Path(args.pred_dir)
    for r in records:
        gt = load_raster(manifest_path.parent / r.ann_path)
        pred = load_raster(pred_dir / Path(r.ann_path).name)
        mt.accumulate(cm, pred, gt)
    exclude = (0,) if args.exclude_unlabeled else ()
    sys.stdout.write(mt.evaluation_report(cm, cmap, exclude))
    if args.csv:
        Path(args.csv).write_text(mt.iou_csv(cm, cmap), encoding="utf-8")
    return 0


def _bench_stage(name: str):
    cmap = rm.DEFAULT_CLASS_MAP
    cache = {}

    def homography_for(w, h):
        if (w, h) not in cache:
            src = ((0, 0), (w - 1, 0), (w - 1, h - 1), (0, h - 1))
            dst = ((0.3 * w, 0), (0.7 * w, 0), (w - 1, h - 1), (0, h - 1))
            cache[w, h] = bev.estimate_homography(bev.Correspondences4(src, dst))
        return cache[w, h]

    def warp(mode):
        def run(r):
            return bev.warp_image(r, homography_for(r.width, r.height), r.width, r.height, mode)
        return run

    stages = {
        "noop": (lambda r: r, 3),
        "warp": (warp("bilinear"), 3),
        "warp_nearest": (warp("nearest"), 1),
        "color_to_id": (lambda r: ap.color_to_id(r, cmap, "nearest"), 3),
        "fit64": (lambda r: ap.fit_dims_64(r, "bilinear"), 3),
    }
    if name not in stages:
        raise UsageError(f"unknown stage {name!r}; choose from {', '.join(stages)}")
    return stages[name]


def cmd_bench(args) -> int:
    processor, channels = _bench_stage(args.stage)
    try:
        resolutions = [_parse_resolution(t) for t in args.resolutions.split(",")]
    except ValueError:
        raise UsageError(f"bad resolution list {args.resolutions!r}") from None
    reports = bn.resolution_sweep(processor, resolutions, args.frames, args.warmup,
                                  args.repetitions, channels=channels, name=args.stage)
    sys.stdout.write(bn.format_table(reports))
    if args.csv:
        Path(args.csv).write_text(bn.reports_csv(reports), encoding="utf-8")
    return 0


# ------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config file")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")

    p = argparse.ArgumentParser(prog="trackseg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-layout", parents=[common], help="generate a random route layout")
    g.add_argument("-o", "--output", help="layout file to write (default: stdout)")
    g.add_argument("--min-segments", type=int, default=4)
    g.add_argument("--max-segments", type=int, default=8)
    g.add_argument("--kinds", help="comma-separated segment kinds")
    g.add_argument("--radius-range", type=float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--angle-range-deg", type=float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--length-range", type=float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--closed", action="store_true", help="retry until the route closes")
    g.set_defaults(func=cmd_gen_layout)

    r = sub.add_parser("render", parents=[common], help="render top-down images and trajectory")
    r.add_argument("layout", nargs="?")
    r.set_defaults(func=cmd_render)

    s = sub.add_parser("simulate", parents=[common], help="record first-person frames and dataset")
    s.add_argument("--layout")
    s.add_argument("--roi", help="left top width height")
    s.add_argument("--stride", type=int)
    s.add_argument("--max-frames", type=int)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bev", parents=[common], help="convert a dataset to bird's-eye view")
    b.add_argument("manifest")
    b.add_argument("--correspondences")
    b.add_argument("--homography")
    b.add_argument("--width", type=int)
    b.add_argument("--height", type=int)
    b.set_defaults(func=cmd_bev)

    sp = sub.add_parser("split", parents=[common], help="assign train/val splits")
    sp.add_argument("manifest")
    sp.add_argument("--fraction", type=float)
    sp.add_argument("-o", "--output", help="manifest to write (default: in place)")
    sp.set_defaults(func=cmd_split)

    e = sub.add_parser("eval", parents=[common], help="IoU/mIoU of predictions against a manifest")
    e.add_argument("pred_dir")
    e.add_argument("manifest")
    e.add_argument("--class-map")
    e.add_argument("--split", choices=ap.SPLITS)
    e.add_argument("--exclude-unlabeled", action="store_true")
    e.add_argument("--csv")
    e.set_defaults(func=cmd_eval)

    bb = sub.add_parser("bench", parents=[common], help="FPS sweep of a toolkit stage")
    bb.add_argument("stage")
    bb.add_argument("--resolutions", default="256x256,320x256,1280x960")
    bb.add_argument("--frames", type=int, default=20)
    bb.add_argument("--warmup", type=int, default=bn.DEFAULT_WARMUP)
    bb.add_argument("--repetitions", type=int, default=bn.DEFAULT_REPETITIONS)
    bb.add_argument("--csv")
    bb.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except (UsageError, ConfigError, rm.LayoutError, rm.LayoutConstraintError, rr.RenderError,
            rr.ManeuverError, ap.ColorLookupError, bev.DegenerateCorrespondencesError,
            bev.SingularHomographyError, FileNotFoundError, ValueError) as exc:
        print(f"trackseg {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"trackseg {args.command}: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
