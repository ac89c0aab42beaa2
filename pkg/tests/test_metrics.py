import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trackseg import metrics as mt
from trackseg.imaging import Raster
from trackseg.road_model import DEFAULT_CLASS_MAP


def ids(a):
    return Raster.from_array(np.asarray(a, dtype=np.uint8))


def oracle_iou(preds, gts, n):
    """Per-class IoU from pixel-coordinate sets."""
    out = []
    for c in range(n):
        p_set, g_set = set(), set()
        for k, (p, g) in enumerate(zip(preds, gts)):
            p_set |= {(k, i) for i in np.flatnonzero(p.ravel() == c)}
            g_set |= {(k, i) for i in np.flatnonzero(g.ravel() == c)}
        union = p_set | g_set
        out.append(len(p_set & g_set) / len(union) if union else None)
    return out


def test_hand_count():
    cm = mt.accumulate(mt.ConfusionMatrix(2), ids([[0, 1], [1, 1]]), ids([[0, 0], [1, 1]]))
    assert cm.counts.tolist() == [[1, 1], [0, 2]]


def test_perfect_prediction_diagonal():
    a = np.random.default_rng(0).integers(0, 5, (8, 8))
    cm = mt.accumulate(mt.ConfusionMatrix(5), ids(a), ids(a))
    assert np.count_nonzero(cm.counts - np.diag(np.diag(cm.counts))) == 0
    assert all(v == 1.0 for _, v in mt.iou_per_class(cm) if v is not None)


def test_iou_spot_value():
    cm = mt.ConfusionMatrix(2, [[50, 25], [25, 0]])
    assert mt.iou_per_class(cm)[0] == (0, 0.5)


def test_miou_examples():
    # class 0: 3/3, class 1: 1/2, class 2: 0/1
    cm = mt.ConfusionMatrix(3, [[3, 0, 0], [0, 1, 0], [0, 1, 0]])
    assert [v for _, v in mt.iou_per_class(cm)] == [1.0, 0.5, 0.0]
    assert mt.miou(cm, exclude=(2,)) == pytest.approx(0.75)
    assert mt.miou(cm) == pytest.approx(0.5)
    # class 0 at 0.3 with class 1 left out
    assert mt.miou(mt.ConfusionMatrix(2, [[3, 7], [0, 0]]), exclude=(1,)) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        mt.miou(mt.ConfusionMatrix(2))


def test_undefined_class_skipped():
    cm = mt.ConfusionMatrix(3, [[3, 7, 0], [0, 0, 0], [0, 0, 0]])
    ious = dict(mt.iou_per_class(cm))
    assert ious[2] is None
    assert mt.miou(cm) == pytest.approx((0.3 + 0.0) / 2)


def test_errors():
    with pytest.raises(ValueError, match="differ"):
        mt.accumulate(mt.ConfusionMatrix(3), ids(np.zeros((2, 2))), ids(np.zeros((2, 3))))
    with pytest.raises(ValueError, match="outside"):
        mt.accumulate(mt.ConfusionMatrix(3), ids([[3]]), ids([[0]]))


def test_random_pairs_match_oracle():
    rng = np.random.default_rng(11)
    preds = [rng.integers(0, 10, (16, 16)) for _ in range(6)]
    gts = [rng.integers(0, 10, (16, 16)) for _ in range(6)]
    cm = mt.ConfusionMatrix(10)
    for p, g in zip(preds, gts):
        mt.accumulate(cm, ids(p), ids(g))
    tally = np.zeros((10, 10), dtype=int)
    for p, g in zip(preds, gts):
        for pv, gv in zip(p.ravel(), g.ravel()):
            tally[gv, pv] += 1
    assert np.array_equal(cm.counts, tally)
    ref = oracle_iou(preds, gts, 10)
    for (c, v), r in zip(mt.iou_per_class(cm), ref):
        assert abs(v - r) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_order_independence_and_merge(seed, n_img):
    rng = np.random.default_rng(seed)
    pairs = [(ids(rng.integers(0, 4, (5, 7))), ids(rng.integers(0, 4, (5, 7)))) for _ in range(n_img)]
    full = mt.ConfusionMatrix(4)
    for p, g in pairs:
        mt.accumulate(full, p, g)
    rev = mt.ConfusionMatrix(4)
    for p, g in reversed(pairs):
        mt.accumulate(rev, p, g)
    assert full == rev
    k = n_img // 2
    a, b = mt.ConfusionMatrix(4), mt.ConfusionMatrix(4)
    for p, g in pairs[:k]:
        mt.accumulate(a, p, g)
    for p, g in pairs[k:]:
        mt.accumulate(b, p, g)
    assert a + b == full
    assert full.total == n_img * 35


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_iou_bounds_and_permutation(seed):
    rng = np.random.default_rng(seed)
    p, g = rng.integers(0, 6, (10, 10)), rng.integers(0, 6, (10, 10))
    cm = mt.accumulate(mt.ConfusionMatrix(6), ids(p), ids(g))
    vals = [v for _, v in mt.iou_per_class(cm) if v is not None]
    assert all(0 <= v <= 1 for v in vals)
    assert min(vals) - 1e-12 <= mt.miou(cm) <= max(vals) + 1e-12
    perm = rng.permutation(6)
    cm2 = mt.accumulate(mt.ConfusionMatrix(6), ids(perm[p]), ids(perm[g]))
    a = dict(mt.iou_per_class(cm))
    b = dict(mt.iou_per_class(cm2))
    for c in range(6):
        assert a[c] == b[int(perm[c])]
    assert mt.miou(cm2) == pytest.approx(mt.miou(cm), abs=1e-12)


def test_report_perfect_and_round_trip():
    a = np.arange(100).reshape(10, 10) % 10
    cm = mt.accumulate(mt.ConfusionMatrix(10), ids(a), ids(a))
    text = mt.evaluation_report(cm, DEFAULT_CLASS_MAP)
    rows = mt.parse_report(text)
    assert len(rows) == 11
    assert all(v == 100.0 for v in rows.values())
    assert "mIoU" in rows


def test_report_round_trip_values():
    rng = np.random.default_rng(2)
    cm = mt.accumulate(mt.ConfusionMatrix(10), ids(rng.integers(0, 8, (30, 30))), ids(rng.integers(0, 8, (30, 30))))
    text = mt.evaluation_report(cm, DEFAULT_CLASS_MAP, exclude=(0,))
    rows = mt.parse_report(text)
    for c, v in mt.iou_per_class(cm):
        name = DEFAULT_CLASS_MAP.name_of(c)
        assert rows[name] == (None if v is None else round(100 * v, 2))
    assert rows["mIoU"] == round(100 * mt.miou(cm, exclude=(0,)), 2)
    widths = {line.index(" ", 32) for line in text.splitlines()[2:12]}
    assert widths == {32}


def test_iou_csv():
    cm = mt.ConfusionMatrix(10, np.eye(10, dtype=int))
    lines = mt.iou_csv(cm, DEFAULT_CLASS_MAP).splitlines()
    assert lines[0] == "class_id,name,iou"
    assert lines[1] == "0,unlabeled,1.0"
