from __future__ import annotations

from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from src.errors import EmptyInput, LengthMismatch

HEADER = ("precision", "recall", "f1-score", "support")
AVG_LABEL = "avg / total"


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray      # (C, C); rows = true class, columns = predicted
    class_ids: np.ndarray   # (C,)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassReport:
    class_ids: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    avg_precision: float
    avg_recall: float
    avg_f1: float
    accuracy: float

    @property
    def total(self) -> int:
        return int(self.support.sum())

    @classmethod
    def from_per_class(cls, class_ids: Sequence[int], precision: Sequence[float], recall: Sequence[float],
                       f1: Sequence[float], support: Sequence[int]) -> "ClassReport":
        """Assemble a report from per-class rows, computing the support-weighted averages."""
        support = np.asarray(support, dtype=np.int64)
        total = support.sum()
        if total <= 0:
            raise EmptyInput("report needs at least one supported sample")
        precision, recall, f1 = (np.asarray(v, dtype=np.float64) for v in (precision, recall, f1))
        weight = support / total
        return cls(
            class_ids=np.asarray(class_ids, dtype=np.int64),
            precision=precision,
            recall=recall,
            f1=f1,
            support=support,
            avg_precision=float(weight @ precision),
            avg_recall=float(weight @ recall),
            avg_f1=float(weight @ f1),
            # accuracy is the support-weighted recall
            accuracy=float(weight @ recall),
        )

    def to_dict(self) -> dict:
        return {
            "classes": [
                {"digit": int(d), "precision": float(p), "recall": float(r), "f1": float(f), "support": int(s)}
                for d, p, r, f, s in zip(self.class_ids, self.precision, self.recall, self.f1, self.support)
            ],
            "weighted": {"precision": self.avg_precision, "recall": self.avg_recall, "f1": self.avg_f1},
            "accuracy": self.accuracy,
            "total": self.total,
        }


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.shape[0]} true labels but {y_pred.shape[0]} predictions")
    if y_true.size == 0:
        raise EmptyInput("cannot tally an empty prediction list")
    class_ids = np.union1d(y_true, y_pred)
    counts = confusion_matrix(y_true, y_pred, labels=class_ids).astype(np.int64)
    return ConfusionMatrix(counts, class_ids)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # 0/0 -> 0
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def report(cm: ConfusionMatrix) -> ClassReport:
    if cm.total <= 0:
        raise EmptyInput("confusion matrix is empty")
    tp = np.diag(cm.counts).astype(np.float64)
    precision = _ratio(tp, cm.counts.sum(axis=0).astype(np.float64))
    recall = _ratio(tp, cm.counts.sum(axis=1).astype(np.float64))
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    rep = ClassReport.from_per_class(cm.class_ids, precision, recall, f1, cm.counts.sum(axis=1))
    # exact trace/total rather than the weighted-recall float path
    return replace(rep, accuracy=float(np.trace(cm.counts)) / cm.total)


def fmt2(value: float) -> str:
    """Two decimals, round-half-up on the shortest decimal repr, locale-free."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def format_report(r: ClassReport) -> str:
    width = max(len(AVG_LABEL), 10)
    head = " " * width + "".join(f"{h:>10}" for h in HEADER)
    lines = [head, ""]
    for d, p, rc, f, s in zip(r.class_ids, r.precision, r.recall, r.f1, r.support):
        lines.append(f"{int(d):>{width}}{fmt2(p):>10}{fmt2(rc):>10}{fmt2(f):>10}{int(s):>10}")
    lines.append("")
    lines.append(
        f"{AVG_LABEL:>{width}}{fmt2(r.avg_precision):>10}{fmt2(r.avg_recall):>10}"
        f"{fmt2(r.avg_f1):>10}{r.total:>10}"
    )
    return "\n".join(lines) + "\n"
