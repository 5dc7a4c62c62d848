"""Classification metrics over Monte Carlo trial records."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from threatfuse.fusion import ThreatType


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts with true type on rows and predicted type on columns."""

    labels: tuple[str, ...]
    counts: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if counts.shape != (n, n):
            raise ValueError(f"counts shape {counts.shape} does not match {n} labels")
        if (counts < 0).any():
            raise ValueError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class_f1: tuple[float, ...]


def confusion(records: Iterable, types: Sequence[ThreatType]) -> ConfusionMatrix:
    """Tally (true, predicted) pairs from records into a confusion matrix."""
    records = list(records)
    if not records:
        raise ValueError("cannot build a confusion matrix from zero records")
    n = len(types)
    counts = np.zeros((n, n), dtype=np.int64)
    for rec in records:
        counts[rec.true_type.index, rec.predicted_type.index] += 1
    return ConfusionMatrix(labels=tuple(t.label for t in types), counts=counts)


def report(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy plus macro precision/recall/F1 with the 0-for-empty rule.

    A class with no predicted (or no true) instances contributes 0 to the
    macro precision (or recall) average; F1 is 0 whenever P + R is 0.
    """
    counts = cm.counts
    total = counts.sum()
    if total == 0:
        raise ValueError("confusion matrix is empty")
    accuracy = float(np.trace(counts) / total)
    precisions = []
    recalls = []
    f1s = []
    for k in range(len(cm.labels)):
        tp = counts[k, k]
        predicted = counts[:, k].sum()
        actual = counts[k, :].sum()
        precision = float(tp / predicted) if predicted > 0 else 0.0
        recall = float(tp / actual) if actual > 0 else 0.0
        f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
    return MetricsReport(
        accuracy=accuracy,
        macro_precision=float(np.mean(precisions)),
        macro_recall=float(np.mean(recalls)),
        macro_f1=float(np.mean(f1s)),
        per_class_f1=tuple(f1s),
    )
