import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from trackseg import road_model as rm
from trackseg.annotation_pipeline import DatasetManifest
from trackseg.cli import main
from trackseg.config import ConfigError, parse_config
from trackseg.imaging import load_raster
from trackseg.metrics import parse_report

DATA = Path(__file__).resolve().parents[1] / "data"


def write_config(path, layout, **extra):
    lines = [f"layout = {layout}", "roi = 0 64 320 192", "spacing = 0.05"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_gen_layout_deterministic(tmp_path):
    assert main(["gen-layout", "--seed", "42", "-o", str(tmp_path / "a.layout"), "--quiet"]) == 0
    assert main(["gen-layout", "--seed", "42", "-o", str(tmp_path / "b.layout"), "--quiet"]) == 0
    text = (tmp_path / "a.layout").read_text()
    assert text == (tmp_path / "b.layout").read_text()
    assert rm.validate_layout(rm.parse_layout(text)) == []


def test_gen_layout_stdout(capsys):
    assert main(["gen-layout", "--seed", "1", "--kinds", "straight"]) == 0
    out = capsys.readouterr().out
    assert {s.kind for s in rm.parse_layout(out).segments} == {"straight"}


def test_gen_layout_unsatisfiable(capsys):
    code = main(["gen-layout", "--seed", "1", "--kinds", "arc", "--radius-range", "0.1", "0.3"])
    assert code == 2
    assert "radius" in capsys.readouterr().err


def test_render_outputs(tmp_path):
    assert main(["render", str(DATA / "sample.layout"), "--out", str(tmp_path), "--quiet"]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["topdown_ann_color.ppm", "topdown_ann_id.pgm", "topdown_raw.ppm", "trajectory.csv"]
    assert load_raster(tmp_path / "topdown_ann_id.pgm").channels == 1


def test_render_invalid_layout(tmp_path):
    bad = tmp_path / "bad.layout"
    bad.write_text("segment arc radius_m=0.1 angle_deg=90 dir=left\n")
    assert main(["render", str(bad), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_simulate_stride(tmp_path):
    lay = tmp_path / "line.layout"
    lay.write_text("segment straight length_m=4.95\n")
    cfg = write_config(tmp_path / "sim.cfg", lay.name, stride=5)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    man = DatasetManifest.load(tmp_path / "o" / "manifest.csv")
    assert len(man) == 20
    assert len(list((tmp_path / "o" / "dataset" / "raw").iterdir())) == 20
    frames = (tmp_path / "o" / "frames.csv").read_text().splitlines()
    assert len(frames) == 21
    for r in man.records:
        ann = load_raster(tmp_path / "o" / r.ann_path)
        raw = load_raster(tmp_path / "o" / r.raw_path)
        assert ann.channels == 1 and raw.channels == 3
        assert ann.shape == raw.shape == (320, 192)


def test_simulate_requires_roi(tmp_path, capsys):
    code = main(["simulate", "--layout", str(DATA / "sample.layout"), "--out", str(tmp_path)])
    assert code == 2
    assert "region of interest" in capsys.readouterr().err


def test_simulate_missing_layout(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("layout = nowhere.layout\nroi = 0 0 320 256\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_full_chain(tmp_path, capsys):
    cfg = write_config(tmp_path / "sim.cfg", DATA / "sample.layout", stride=10, max_frames=6)
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out", str(sim), "--quiet"]) == 0
    assert main(["split", str(sim / "manifest.csv"), "--fraction", "0.5", "--seed", "3", "--quiet"]) == 0
    counts = DatasetManifest.load(sim / "manifest.csv").counts()
    assert counts == {("synthetic", "train"): 3, ("synthetic", "val"): 3}
    corr = tmp_path / "corr.txt"
    corr.write_text("100 47 0 0\n220 47 319 0\n352 104 319 255\n-32 104 0 255\n")
    assert main(["bev", str(sim / "manifest.csv"), "--correspondences", str(corr),
                 "--out", str(tmp_path / "bev"), "--quiet"]) == 0
    bev_man = DatasetManifest.load(tmp_path / "bev" / "manifest.csv")
    assert {r.perspective for r in bev_man.records} == {"bird"}
    assert load_raster(tmp_path / "bev" / bev_man.records[0].ann_path).shape == (320, 256)
    capsys.readouterr()
    assert main(["eval", str(sim / "dataset" / "ann"), str(sim / "manifest.csv"),
                 "--split", "val", "--csv", str(tmp_path / "iou.csv")]) == 0
    report = capsys.readouterr().out
    assert parse_report(report)["mIoU"] == 100.0
    assert (tmp_path / "iou.csv").read_text().startswith("class_id,name,iou")


def test_bev_needs_one_source(tmp_path):
    (tmp_path / "m.csv").write_text("raw_path,ann_path,perspective,split,source\n")
    assert main(["bev", str(tmp_path / "m.csv"), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_bench_command(tmp_path, capsys):
    code = main(["bench", "fit64", "--resolutions", "70x70,64x64", "--frames", "2", "--warmup", "1",
                 "--repetitions", "1", "--csv", str(tmp_path / "b.csv")])
    assert code == 0
    assert "70 x 70" in capsys.readouterr().out
    assert len((tmp_path / "b.csv").read_text().splitlines()) == 3
    assert main(["bench", "nope"]) == 2
    assert main(["bench", "noop", "--resolutions", "big"]) == 2


def test_config_parsing(tmp_path):
    cfg = parse_config("layout = a.layout\ncamera_pitch_deg = 30\nroi = 1 2 3 4\n"
                       "maneuver overtake start_m=1 length_m=2\nstride = 4\n", base_dir=tmp_path)
    assert cfg.layout == tmp_path / "a.layout"
    assert cfg.camera.pitch == pytest.approx(np.radians(30))
    assert (cfg.roi.left, cfg.roi.height) == (1, 4)
    assert cfg.maneuvers[0].kind == "overtake" and cfg.stride == 4
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("colour = red\n")
    with pytest.raises(ConfigError):
        parse_config("camera_pitch_deg = 120\n")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "trackseg", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("gen-layout", "render", "simulate", "bev", "split", "eval", "bench"):
        assert cmd in out.stdout
