"""Confusion counting, overlap metrics, aggregation, and report emission.

The five metrics are computed from voxel confusion counts with ground
truth as the positive class. Ratios with a vacuously zero denominator
are defined as 1 and flagged, so degenerate comparisons stay total.
Per scan, iou == dice / (2 - dice) holds exactly; means over scans need
not satisfy the identity.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import EmptyAggregate, ShapeMismatch
from .volume import Mask3D


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricReport:
    dice: float
    iou: float
    accuracy: float
    precision: float
    recall: float
    counts: ConfusionCounts
    undefined: frozenset[str] = frozenset()


@dataclass(frozen=True)
class CategoryAggregate:
    category: str
    tool: str
    per_scan: tuple[MetricReport, ...]
    means: dict = field(default_factory=dict)
    notes: str = ""


def confusion(pred: Mask3D, gt: Mask3D) -> ConfusionCounts:
    """Voxelwise confusion counts; grids must already be aligned."""
    if pred.dims != gt.dims:
        raise ShapeMismatch(f"prediction {pred.dims} vs ground truth {gt.dims}")
    p, g = pred.data, gt.data
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = int(np.count_nonzero(~p & ~g))
    return ConfusionCounts(tp, fp, fn, tn)


def _ratio(num: int, den: int, name: str, undefined: set) -> float:
    if den == 0:
        undefined.add(name)
        return 1.0
    return num / den


def metrics(c: ConfusionCounts) -> MetricReport:
    """The five overlap metrics from confusion counts."""
    undefined: set[str] = set()
    dice = _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, "dice", undefined)
    iou = _ratio(c.tp, c.tp + c.fp + c.fn, "iou", undefined)
    accuracy = _ratio(c.tp + c.tn, c.total, "accuracy", undefined)
    precision = _ratio(c.tp, c.tp + c.fp, "precision", undefined)
    recall = _ratio(c.tp, c.tp + c.fn, "recall", undefined)
    return MetricReport(dice, iou, accuracy, precision, recall, c, frozenset(undefined))


def compare_masks(pred: Mask3D, gt: Mask3D) -> MetricReport:
    return metrics(confusion(pred, gt))


_METRIC_NAMES = ("dice", "iou", "accuracy", "precision", "recall")


def aggregate(reports, category: str, tool: str, notes: str = "") -> CategoryAggregate:
    """Unweighted per-scan mean of each metric."""
    reports = tuple(reports)
    if not reports:
        raise EmptyAggregate(f"no reports for category {category!r} / tool {tool!r}")
    means = {
        name: float(np.mean([getattr(r, name) for r in reports]))
        for name in _METRIC_NAMES
    }
    return CategoryAggregate(category, tool, reports, means, notes)


def round3(x: float) -> str:
    """Three decimals, round half-up (0.89044 -> '0.890', 0.0005 -> '0.001')."""
    return str(Decimal(repr(float(x))).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def emit_report(aggregates, fmt: str = "csv") -> str:
    """Render aggregates as CSV or a markdown pipe table, one row per
    (category, tool), ordered by category then tool."""
    if fmt not in ("csv", "markdown"):
        raise ValueError(f"format must be csv or markdown, got {fmt!r}")
    rows = sorted(aggregates, key=lambda a: (a.category, a.tool))
    if fmt == "csv":
        out = io.StringIO()
        out.write("category,tool,n,dice,iou,accuracy,recall,precision\n")
        for a in rows:
            m = a.means
            out.write(
                f"{a.category},{a.tool},{len(a.per_scan)},"
                f"{round3(m['dice'])},{round3(m['iou'])},{round3(m['accuracy'])},"
                f"{round3(m['recall'])},{round3(m['precision'])}\n"
            )
        for a in rows:
            if a.notes:
                out.write(f"# {a.category}/{a.tool}: {a.notes}\n")
        return out.getvalue()

    out = io.StringIO()
    out.write("| Category | Tool | n | Dice | IoU | Acc | Recall | Prec |\n")
    out.write("|---|---|---|---|---|---|---|---|\n")
    for a in rows:
        m = a.means
        out.write(
            f"| {a.category} | {a.tool} | {len(a.per_scan)} "
            f"| {round3(m['dice'])} | {round3(m['iou'])} | {round3(m['accuracy'])} "
            f"| {round3(m['recall'])} | {round3(m['precision'])} |\n"
        )
    notes = [a for a in rows if a.notes]
    if notes:
        out.write("\n")
        for a in notes:
            out.write(f"- {a.category}/{a.tool}: {a.notes}\n")
    return out.getvalue()
