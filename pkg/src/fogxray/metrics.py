"""Confusion-matrix accounting and binary classification metrics.

All metrics derive from TP/TN/FP/FN tallies of hard 0/1 labels. Log loss
is the one exception: it needs the predicted probabilities, so it is
computed by the loss function and attached to the report separately.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    specificity: float
    sensitivity: float
    accuracy: float
    f1: float
    log_loss: Optional[float] = None
    # True when some ratio hit a 0/0 denominator and was reported as 0.
    degenerate: bool = False

    def with_log_loss(self, log_loss: float) -> "MetricReport":
        return replace(self, log_loss=log_loss)


CSV_HEADER = "split,precision,recall,specificity,accuracy,f1,log_loss"


def confusion(predicted: Sequence[int], true: Sequence[int]) -> ConfusionCounts:
    """Tally TP/TN/FP/FN for hard 0/1 label vectors of equal length."""
    pred = np.asarray(predicted)
    truth = np.asarray(true)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"label vectors must be 1-D and equal length, got {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("cannot build a confusion matrix from zero samples")
    for name, v in (("predicted", pred), ("true", truth)):
        if not np.isin(v, (0, 1)).all():
            raise ValueError(f"{name} labels must be 0 or 1")
    tp = int(np.sum((pred == 1) & (truth == 1)))
    tn = int(np.sum((pred == 0) & (truth == 0)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(num: int, den: int) -> tuple[float, bool]:
    # 0/0 yields 0 with the degenerate flag, keeping reports NaN-free.
    if den == 0:
        return 0.0, True
    return num / den, False


def compute_metrics(c: ConfusionCounts) -> MetricReport:
    """Precision, recall, specificity, sensitivity, accuracy and F1 from counts."""
    if min(c.tp, c.tn, c.fp, c.fn) < 0:
        raise ValueError("confusion counts must be non-negative")
    if c.total == 0:
        raise ValueError("confusion counts sum to zero")
    precision, d1 = _ratio(c.tp, c.tp + c.fp)
    recall, d2 = _ratio(c.tp, c.tp + c.fn)
    specificity, d3 = _ratio(c.tn, c.tn + c.fp)
    accuracy = (c.tp + c.tn) / c.total
    if precision + recall > 0:
        f1, d4 = 2 * precision * recall / (precision + recall), False
    else:
        f1, d4 = 0.0, True
    return MetricReport(
        precision=precision,
        recall=recall,
        specificity=specificity,
        sensitivity=recall,
        accuracy=accuracy,
        f1=f1,
        degenerate=d1 or d2 or d3 or d4,
    )


def csv_row(split: str, report: MetricReport) -> str:
    """One report line: split name plus the six metrics, 6-decimal fixed."""
    log_loss = report.log_loss if report.log_loss is not None else float("nan")
    return (
        f"{split},{report.precision:.6f},{report.recall:.6f},"
        f"{report.specificity:.6f},{report.accuracy:.6f},{report.f1:.6f},{log_loss:.6f}"
    )
