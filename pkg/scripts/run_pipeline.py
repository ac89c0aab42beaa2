"""End-to-end demo: random layout -> top-down render -> first-person frames ->
bird's-eye view -> split -> self-evaluation.

    python3 scripts/run_pipeline.py --seed 3 --frames 40 --out /tmp/trackseg_demo
"""
import argparse
import time
from pathlib import Path

from trackseg.bev import write_correspondences
from trackseg.camera_sim import CameraModel, ground_rectangle_correspondences
from trackseg.cli import main as cli


def step(name, argv):
    t0 = time.perf_counter()
    code = cli(argv + ["--quiet"])
    print(f"{name:<11} exit {code}  {time.perf_counter() - t0:6.2f} s")
    if code:
        raise SystemExit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--frames", type=int, default=50)
    ap.add_argument("--stride", type=int, default=2)
    ap.add_argument("--out", default="pipeline_out")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    layout = out / "route.layout"
    step("gen-layout", ["gen-layout", "--seed", str(args.seed), "-o", str(layout)])
    step("render", ["render", str(layout), "--out", str(out / "topdown")])
    (out / "run.cfg").write_text(
        f"layout = route.layout\nroi = 0 64 320 192\nstride = {args.stride}\n"
        f"max_frames = {args.frames}\nseed = {args.seed}\n")
    step("simulate", ["simulate", "--config", str(out / "run.cfg"), "--out", str(out / "first_person")])
    write_correspondences(ground_rectangle_correspondences(CameraModel(), 320, 256, offset=(0, 64)),
                          out / "corr.txt")
    step("bev", ["bev", str(out / "first_person" / "manifest.csv"), "--correspondences",
                 str(out / "corr.txt"), "--out", str(out / "bird")])
    step("split", ["split", str(out / "bird" / "manifest.csv"), "--seed", str(args.seed)])
    print()
    cli(["eval", str(out / "bird" / "dataset" / "ann"), str(out / "bird" / "manifest.csv")])


if __name__ == "__main__":
    main()
