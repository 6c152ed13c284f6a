"""Confusion matrix and per-class classification reports for binary theta."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    def swapped(self) -> "ConfusionMatrix":
        """The same counts with class 0 taken as the positive class."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


def _as_binary(name: str, values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} has non-binary entries")
    return arr.astype(np.int64)


def confusion(labels_true: Sequence[int], labels_pred: Sequence[int]) -> ConfusionMatrix:
    y = _as_binary("labels_true", labels_true)
    p = _as_binary("labels_pred", labels_pred)
    if len(y) != len(p):
        raise ValueError(f"length mismatch: {len(y)} true vs {len(p)} predicted")
    return ConfusionMatrix(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: bool = False


def _ratio(num: int, den: int) -> tuple[float, bool]:
    return (num / den, False) if den else (0.0, True)


def _class_metrics(tp: int, fp: int, fn: int) -> ClassMetrics:
    precision, d1 = _ratio(tp, tp + fp)
    recall, d2 = _ratio(tp, tp + fn)
    if precision + recall > 0:
        f1, d3 = 2 * precision * recall / (precision + recall), False
    else:
        f1, d3 = 0.0, True
    return ClassMetrics(precision, recall, f1, tp + fn, d1 or d2 or d3)


@dataclass(frozen=True)
class ClassReport:
    class0: ClassMetrics
    class1: ClassMetrics
    matrix: ConfusionMatrix

    def __getitem__(self, cls: int) -> ClassMetrics:
        return (self.class0, self.class1)[cls]

    def to_dict(self) -> dict:
        return {
            "0": asdict(self.class0),
            "1": asdict(self.class1),
            "confusion": asdict(self.matrix),
            "accuracy": self.matrix.accuracy,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def report_from_confusion(cm: ConfusionMatrix) -> ClassReport:
    return ClassReport(
        class0=_class_metrics(cm.tn, cm.fn, cm.fp),
        class1=_class_metrics(cm.tp, cm.fp, cm.fn),
        matrix=cm,
    )


def report(labels_true: Sequence[int], labels_pred: Sequence[int]) -> ClassReport:
    """Per-class precision, recall, f1 and support.

    A metric whose denominator is zero is reported as 0.0 and the class is
    flagged ``degenerate``.
    """
    return report_from_confusion(confusion(labels_true, labels_pred))


_ROWS = [
    ("precision", 0), ("recall", 0), ("f1-score", 0), ("support", 0),
    ("precision", 1), ("recall", 1), ("f1-score", 1), ("support", 1),
]


def render_table(reports: Mapping[str, ClassReport], decimals: int = 2) -> str:
    """Aligned text table with one column per model, rows grouped by class."""
    names = list(reports)
    label_w = max(len(f"{m} theta={c}") for m, c in _ROWS)
    col_w = max([6] + [len(n) for n in names])
    lines = [" " * label_w + "  " + "  ".join(n.rjust(col_w) for n in names)]
    for metric, cls in _ROWS:
        cells = []
        for name in names:
            m = reports[name][cls]
            if metric == "support":
                cells.append(str(m.support).rjust(col_w))
            else:
                value = m.f1 if metric == "f1-score" else getattr(m, metric)
                cells.append(f"{value:.{decimals}f}".rjust(col_w))
        lines.append(f"{metric} theta={cls}".ljust(label_w) + "  " + "  ".join(cells))
    return "\n".join(lines)
