"""F1 and balanced accuracy over annotated pixels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise MetricError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_scores(cls, scores, labels, threshold: float = 0.5) -> "ConfusionCounts":
        s = np.asarray(scores, dtype=np.float64).reshape(-1)
        y = np.asarray(labels).reshape(-1)
        if s.shape != y.shape:
            raise MetricError(f"{s.size} scores for {y.size} labels")
        if s.size == 0:
            raise MetricError("no annotated pixels to evaluate")
        pred = s >= threshold
        pos = y == 1
        return cls(
            tp=int(np.sum(pred & pos)),
            fp=int(np.sum(pred & ~pos)),
            tn=int(np.sum(~pred & ~pos)),
            fn=int(np.sum(~pred & pos)),
        )


def f1_from_counts(c: ConfusionCounts) -> float:
    """F1 of the positive class; 0 when there are no true positives."""
    if c.tp == 0:
        return 0.0
    precision = c.tp / (c.tp + c.fp)
    recall = c.tp / (c.tp + c.fn)
    return 2 * precision * recall / (precision + recall)


def bacc_from_counts(c: ConfusionCounts) -> float:
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        raise MetricError("balanced accuracy is undefined when only one class is present")
    return (c.tp / (c.tp + c.fn) + c.tn / (c.tn + c.fp)) / 2


def f1_and_bacc(scores, labels, threshold: float = 0.5) -> tuple[float, float]:
    """(F1, bAcc) of thresholded scores against 0/1 labels."""
    c = ConfusionCounts.from_scores(scores, labels, threshold)
    return f1_from_counts(c), bacc_from_counts(c)
