"""FPS sweep of the toolkit stages over the source resolutions of the
benchmark table (256x256 up to 2048x1536).

    python3 scripts/bench_sweep.py --frames 10 --csv sweep.csv
"""
import argparse

from trackseg import bench
from trackseg.cli import _bench_stage

RESOLUTIONS = [(256, 256), (320, 256), (640, 480), (1280, 960), (2048, 1536)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--stages", default="warp,warp_nearest,color_to_id,fit64")
    ap.add_argument("--frames", type=int, default=10)
    ap.add_argument("--warmup", type=int, default=3)
    ap.add_argument("--repetitions", type=int, default=1)
    ap.add_argument("--max-pixels", type=int, default=2048 * 1536)
    ap.add_argument("--csv")
    args = ap.parse_args()

    res = [r for r in RESOLUTIONS if r[0] * r[1] <= args.max_pixels]
    reports = []
    for stage in args.stages.split(","):
        proc, channels = _bench_stage(stage)
        reports += bench.resolution_sweep(proc, res, args.frames, args.warmup, args.repetitions,
                                          channels=channels, name=stage)
    print(bench.format_table(reports), end="")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(bench.reports_csv(reports))


if __name__ == "__main__":
    main()
