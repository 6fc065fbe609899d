import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from samstrip.errors import EmptyAggregate, ShapeMismatch
from samstrip.metrics import (
    ConfusionCounts,
    aggregate,
    compare_masks,
    confusion,
    emit_report,
    metrics,
    round3,
)
from samstrip.volume import Mask3D


def _mask(bits):
    return Mask3D(np.asarray(bits, dtype=bool), np.eye(4))


def test_confusion_identical_masks():
    bits = np.zeros((3, 3, 3), dtype=bool)
    bits.flat[:10] = True
    c = confusion(_mask(bits), _mask(bits))
    assert (c.tp, c.fp, c.fn, c.tn) == (10, 0, 0, 17)


def test_confusion_hand_case():
    pred = np.zeros((3, 3, 3), dtype=bool)
    gt = np.zeros((3, 3, 3), dtype=bool)
    pred.flat[[0, 1, 2]] = True
    gt.flat[[1, 2, 3, 4]] = True
    c = confusion(_mask(pred), _mask(gt))
    assert (c.tp, c.fp, c.fn, c.tn) == (2, 1, 2, 22)


def test_confusion_both_empty():
    z = np.zeros((2, 2, 2), dtype=bool)
    c = confusion(_mask(z), _mask(z))
    assert (c.tp, c.fp, c.fn, c.tn) == (0, 0, 0, 8)


def test_confusion_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        confusion(_mask(np.zeros((2, 2, 2), dtype=bool)), _mask(np.zeros((3, 3, 3), dtype=bool)))


def test_confusion_symmetry(rng):
    a = rng.random((4, 4, 4)) > 0.5
    b = rng.random((4, 4, 4)) > 0.5
    ab = confusion(_mask(a), _mask(b))
    ba = confusion(_mask(b), _mask(a))
    assert ab.tp == ba.tp and ab.tn == ba.tn
    assert ab.fp == ba.fn and ab.fn == ba.fp


def test_metrics_hand_case():
    r = metrics(ConfusionCounts(tp=2, fp=1, fn=2, tn=22))
    assert r.dice == pytest.approx(4 / 7)
    assert r.iou == pytest.approx(0.4)
    assert r.precision == pytest.approx(2 / 3)
    assert r.recall == pytest.approx(0.5)
    assert r.accuracy == pytest.approx(24 / 27)
    assert r.undefined == frozenset()


def test_iou_matches_published_pair_high_dice():
    # dice 0.942 implies iou 0.942/(2-0.942) = 0.8904, reported 0.891
    r = metrics(ConfusionCounts(tp=471, fp=30, fn=28, tn=1000))
    assert r.dice == pytest.approx(0.942)
    assert abs(r.iou - 0.891) < 0.002


def test_iou_matches_published_pair_mid_dice():
    # dice 0.914 implies iou 0.914/1.086 = 0.8416, reported 0.842
    r = metrics(ConfusionCounts(tp=457, fp=43, fn=43, tn=1000))
    assert r.dice == pytest.approx(0.914)
    assert abs(r.iou - 0.842) < 0.002


def test_vacuous_ratios_flagged():
    r = metrics(ConfusionCounts(tp=0, fp=0, fn=0, tn=10))
    assert r.dice == 1.0 and r.iou == 1.0 and r.precision == 1.0 and r.recall == 1.0
    assert r.undefined == {"dice", "iou", "precision", "recall"}
    r2 = metrics(ConfusionCounts(tp=0, fp=0, fn=5, tn=5))
    assert r2.precision == 1.0 and "precision" in r2.undefined
    assert r2.recall == 0.0 and "recall" not in r2.undefined


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
def test_identity_and_bounds_property(tp, fp, fn, tn):
    r = metrics(ConfusionCounts(tp, fp, fn, tn))
    for name in ("dice", "iou", "accuracy", "precision", "recall"):
        v = getattr(r, name)
        assert 0.0 <= v <= 1.0
    if r.dice > 0 and "dice" not in r.undefined:
        assert abs(r.iou - r.dice / (2.0 - r.dice)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 1000), st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 1000), st.integers(2, 9))
def test_metrics_scale_free(tp, fp, fn, tn, k):
    a = metrics(ConfusionCounts(tp, fp, fn, tn))
    b = metrics(ConfusionCounts(k * tp, k * fp, k * fn, k * tn))
    for name in ("dice", "iou", "accuracy", "precision", "recall"):
        assert getattr(a, name) == pytest.approx(getattr(b, name), abs=1e-12)


def test_all_ones_iff_exact_nonempty_match(rng):
    bits = rng.random((4, 4, 4)) > 0.5
    bits[0, 0, 0] = True
    r = compare_masks(_mask(bits), _mask(bits))
    assert (r.dice, r.iou, r.accuracy, r.precision, r.recall) == (1, 1, 1, 1, 1)
    other = bits.copy()
    other[1, 1, 1] = not other[1, 1, 1]
    r2 = compare_masks(_mask(other), _mask(bits))
    assert r2.dice < 1 and r2.accuracy < 1


def test_aggregate_means():
    r1 = metrics(ConfusionCounts(90, 10, 10, 100))
    r2 = metrics(ConfusionCounts(95, 5, 5, 100))
    agg = aggregate([r1, r2], "cat", "tool")
    assert agg.means["dice"] == pytest.approx((r1.dice + r2.dice) / 2)
    assert len(agg.per_scan) == 2
    for name, mean in agg.means.items():
        values = [getattr(r, name) for r in agg.per_scan]
        assert min(values) <= mean <= max(values)


def test_aggregate_identical_reports():
    r = metrics(ConfusionCounts(10, 2, 3, 20))
    agg = aggregate([r] * 5, "c", "t")
    for name in ("dice", "iou", "accuracy", "precision", "recall"):
        assert agg.means[name] == pytest.approx(getattr(r, name))


def test_aggregate_empty_list():
    with pytest.raises(EmptyAggregate):
        aggregate([], "c", "t")


def test_mean_dice_pair():
    r1 = metrics(ConfusionCounts(9, 1, 1, 0))
    r2 = metrics(ConfusionCounts(19, 1, 1, 0))
    agg = aggregate([r1, r2], "c", "t")
    assert agg.means["dice"] == pytest.approx((0.9 + 0.95) / 2)


def test_round3_half_up():
    assert round3(0.89044) == "0.890"
    assert round3(0.8905) == "0.891"  # half-up at the 4th decimal
    assert round3(1.0) == "1.000"
    assert round3(0.0005) == "0.001"


def test_emit_csv():
    r = metrics(ConfusionCounts(90, 10, 10, 100))
    aggs = [
        aggregate([r], "b-cat", "pipeline", notes="backend=reference"),
        aggregate([r], "a-cat", "baseline", notes="f=0.5 (builtin)"),
    ]
    text = emit_report(aggs, "csv")
    lines = text.strip().split("\n")
    assert lines[0] == "category,tool,n,dice,iou,accuracy,recall,precision"
    assert lines[1].startswith("a-cat,baseline,1,")
    assert lines[2].startswith("b-cat,pipeline,1,")
    assert "# a-cat/baseline: f=0.5 (builtin)" in text
    assert text.endswith("\n")


def test_emit_markdown_column_order():
    r = metrics(ConfusionCounts(90, 10, 10, 100))
    text = emit_report([aggregate([r], "cat", "tool")], "markdown")
    header = text.split("\n")[0]
    assert header == "| Category | Tool | n | Dice | IoU | Acc | Recall | Prec |"
    assert f"| {round3(r.dice)} |" in text


def test_emit_empty_is_header_only():
    text = emit_report([], "csv")
    assert text == "category,tool,n,dice,iou,accuracy,recall,precision\n"
    md = emit_report([], "markdown")
    assert md.count("\n") == 2
