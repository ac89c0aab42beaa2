"""Derive bird's-eye-view correspondences from the simulated camera.

Four image points of a ground rectangle ahead of the vehicle are mapped to the
corners of the output image.  Image coordinates refer to the ROI-cropped frames
written by ``trackseg simulate``.

    python3 scripts/make_correspondences.py data/sample.cfg -o /tmp/corr.txt
"""
import argparse

from trackseg.bev import write_correspondences
from trackseg.camera_sim import ground_rectangle_correspondences
from trackseg.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("-o", "--output", required=True)
    ap.add_argument("--near", type=float, default=0.45, help="metres ahead of the camera")
    ap.add_argument("--far", type=float, default=1.6)
    ap.add_argument("--half-width", type=float, default=0.6)
    args = ap.parse_args()

    cfg = load_config(args.config)
    if cfg.roi is None:
        ap.error("the config needs a roi")
    c = ground_rectangle_correspondences(cfg.camera, cfg.bev_width, cfg.bev_height, args.near,
                                         args.far, args.half_width, (cfg.roi.left, cfg.roi.top))
    write_correspondences(c, args.output)
    for s, d in zip(c.src, c.dst):
        print(f"{s[0]:9.3f} {s[1]:9.3f} -> {d[0]:6.1f} {d[1]:6.1f}")


if __name__ == "__main__":
    main()
