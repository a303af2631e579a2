"""Binary detection metrics, ROC/AUC and McNemar's paired z-test.

Attack is the positive class throughout.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

Z_CRITICAL = 1.96


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_json(self) -> dict:
        return asdict(self)


def confusion_counts(y_true, y_pred) -> ConfusionCounts:
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    if y_true.shape != y_pred.shape:
        raise ValueError("label vectors differ in length")
    return ConfusionCounts(
        tp=int(np.sum(y_true & y_pred)),
        tn=int(np.sum(~y_true & ~y_pred)),
        fp=int(np.sum(~y_true & y_pred)),
        fn=int(np.sum(y_true & ~y_pred)),
    )


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def binary_metrics(c: ConfusionCounts) -> dict[str, float]:
    """Accuracy, false alarm rate, precision, recall and F1.

    An empty denominator yields 0 for that metric.
    """
    if c.total == 0:
        raise ValueError("no evaluated rows")
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    pr = precision + recall
    return {
        "accuracy": (c.tp + c.tn) / c.total,
        "far": _ratio(c.fp, c.tn + c.fp),
        "precision": precision,
        "recall": recall,
        "f1": 2.0 * precision * recall / pr if pr > 0 else 0.0,
    }


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # descending; the leading +inf marks the (0, 0) corner

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["threshold", "fpr", "tpr"])
        for t, f, r in zip(self.thresholds, self.fpr, self.tpr):
            writer.writerow([repr(float(t)), repr(float(f)), repr(float(r))])
        return buf.getvalue()


def roc_auc(scores, labels) -> tuple[RocCurve, float]:
    """ROC by sweeping distinct score thresholds high to low; AUC by trapezoids.

    Rows sharing a score enter together, so ties contribute a diagonal
    segment (half credit).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    P = int(labels.sum())
    N = labels.size - P
    if P == 0 or N == 0:
        raise ValueError("ROC needs both positive and negative labels")
    order = np.argsort(-scores, kind="stable")
    s, l = scores[order], labels[order]
    last_of_group = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    tp = np.cumsum(l)[last_of_group]
    fp = (last_of_group + 1) - tp
    tpr = np.r_[0.0, tp / P]
    fpr = np.r_[0.0, fp / N]
    thresholds = np.r_[np.inf, s[last_of_group]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds), auc


@dataclass(frozen=True)
class McNemarResult:
    n12: int
    n21: int
    z: float
    significant: bool
    direction: str  # "a", "b" or "tie"

    def to_json(self) -> dict:
        return asdict(self)


def mcnemar_z(n12: int, n21: int) -> float:
    """``(|n12 - n21| - 1) / sqrt(n12 + n21)``; zero when there is no disagreement."""
    if n12 + n21 == 0:
        return 0.0
    return (abs(n12 - n21) - 1) / math.sqrt(n12 + n21)


def mcnemar(correct_a, correct_b) -> McNemarResult:
    """Paired comparison of two classifiers from per-row correctness."""
    a = np.asarray(correct_a).astype(bool)
    b = np.asarray(correct_b).astype(bool)
    if a.shape != b.shape:
        raise ValueError("correctness vectors differ in length")
    n12 = int(np.sum(a & ~b))
    n21 = int(np.sum(~a & b))
    z = mcnemar_z(n12, n21)
    direction = "a" if n12 > n21 else "b" if n21 > n12 else "tie"
    return McNemarResult(n12, n21, z, z > Z_CRITICAL, direction)


@dataclass(frozen=True)
class TimingRecord:
    train_seconds: float
    test_seconds: float

    def __post_init__(self):
        if self.train_seconds < 0 or self.test_seconds < 0:
            raise ValueError("timings must be non-negative")

    def to_json(self) -> dict:
        return {"train_seconds": round(self.train_seconds, 3), "test_seconds": round(self.test_seconds, 3)}
