import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trackseg import bench as bn


def busy(seconds):
    def run(frame):
        t0 = time.perf_counter()
        while time.perf_counter() - t0 < seconds:
            pass
        return frame
    return run


def test_noop_report_contract():
    frames = bn.synthetic_frames(16, 8, 100, channels=1)
    r = bn.benchmark(lambda f: f, frames, warmup=5, repetitions=1, name="noop")
    assert r.fps > 0 and r.frames == 100
    assert 0 <= r.p50_ms <= r.p95_ms <= r.p99_ms
    assert r.fps == r.frames / r.elapsed
    assert r.resolution == (16, 8)


def test_percentiles_match_sort_oracle():
    r = bn.benchmark(lambda f: f, list(range(1, 40)), warmup=0, repetitions=2)
    lat = sorted(r.latencies_ms)
    assert len(lat) == 78
    for q, got in ((50, r.p50_ms), (95, r.p95_ms), (99, r.p99_ms)):
        assert got == float(np.percentile(lat, q, method="inverted_cdf"))


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=60), st.floats(0.1, 100))
def test_percentile_nearest_rank(values, q):
    assert bn.percentile(values, q) == float(np.percentile(values, q, method="inverted_cdf"))


def test_warmup_excluded():
    calls = []

    def proc(f):
        calls.append(f)
        if len(calls) == 1:
            time.sleep(0.2)
        return f
    r = bn.benchmark(proc, [1, 2, 3], warmup=1, repetitions=1)
    assert max(r.latencies_ms) < 100
    assert len(calls) == 4


def test_failure_reports_index():
    def proc(f):
        if f == 3:
            raise RuntimeError("boom")
        return f
    with pytest.raises(bn.BenchmarkError) as info:
        bn.benchmark(proc, [0, 1, 2, 3, 4], warmup=0)
    assert info.value.index == 3


def test_bad_arguments():
    with pytest.raises(ValueError):
        bn.benchmark(lambda f: f, [], warmup=0)
    with pytest.raises(ValueError):
        bn.benchmark(lambda f: f, [1], repetitions=0)


def test_busy_wait_fps():
    r = bn.benchmark(busy(0.010), list(range(100)), warmup=3, repetitions=1)
    assert 85 <= r.fps <= 101


def test_sweep_table_shape():
    reports = bn.resolution_sweep(lambda f: f, [(32, 32)], 3, warmup=1, repetitions=1, name="noop")
    assert len(reports) == 1
    reports = bn.resolution_sweep(lambda f: f, [(32, 32), (64, 16), (8, 8)], 3, warmup=1, repetitions=1)
    table = bn.format_table(reports)
    assert len([l for l in table.splitlines() if " x " in l]) == 3
    csv_lines = bn.reports_csv(reports).splitlines()
    assert csv_lines[0] == "processor,width,height,frames,fps,p50_ms,p95_ms,p99_ms"
    assert len(csv_lines) == 4
    with pytest.raises(ValueError):
        bn.resolution_sweep(lambda f: f, [(0, 5)])
