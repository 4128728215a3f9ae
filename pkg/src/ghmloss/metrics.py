"""Classification metrics: confusion counts, accuracy/precision/recall/F1 and ROC AUC."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    TP: int
    TN: int
    FP: int
    FN: int

    @property
    def total(self) -> int:
        return self.TP + self.TN + self.FP + self.FN


@dataclass(frozen=True)
class MetricsReport:
    auc: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(predictions, labels, positive=1) -> ConfusionCounts:
    pred = np.asarray(predictions)
    true = np.asarray(labels)
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch: {pred.shape[0] if pred.ndim else 0} predictions vs "
                         f"{true.shape[0] if true.ndim else 0} labels")
    pp, tp_ = pred == positive, true == positive
    return ConfusionCounts(
        TP=int(np.sum(pp & tp_)),
        TN=int(np.sum(~pp & ~tp_)),
        FP=int(np.sum(pp & ~tp_)),
        FN=int(np.sum(~pp & tp_)),
    )


def metrics(counts: ConfusionCounts):
    """Accuracy, precision, recall, F1 and a flag set when a ratio had a zero denominator."""
    if counts.total <= 0:
        raise ValueError("metrics need at least one evaluated sample")
    degenerate = False

    def ratio(num, den):
        nonlocal degenerate
        if den == 0:
            degenerate = True
            return 0.0
        return num / den

    accuracy = (counts.TP + counts.TN) / counts.total
    precision = ratio(counts.TP, counts.TP + counts.FP)
    recall = ratio(counts.TP, counts.TP + counts.FN)
    f1 = ratio(2 * precision * recall, precision + recall)
    return accuracy, precision, recall, f1, degenerate


def auc(scores, labels) -> float:
    """Area under the ROC curve by trapezoidal integration over sorted scores.

    Tied scores form a single ROC step, which counts tied pairs as one half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative labels")

    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    # Keep only the last index of each run of tied scores.
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tps = np.cumsum(y)[last]
    fps = (last + 1) - tps
    tpr = np.r_[0, tps] / n_pos
    fpr = np.r_[0, fps] / n_neg
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


def classification_report(probabilities: np.ndarray, labels) -> MetricsReport:
    """Metrics from class probabilities (N x C).

    Two classes use class 1 as the positive class. More classes are scored one
    class at a time against the rest and macro-averaged.
    """
    probs = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels)
    n_classes = probs.shape[1]
    preds = probs.argmax(axis=1)
    positives = [1] if n_classes == 2 else range(n_classes)

    rows, degenerate = [], False
    for c in positives:
        acc, prec, rec, f1, deg = metrics(confusion(preds, labels, positive=c))
        binary = labels == c
        if binary.all() or not binary.any():
            area, deg = 0.0, True
        else:
            area = auc(probs[:, c], binary)
        degenerate |= deg
        rows.append((area, acc, prec, rec, f1))
    mean = np.mean(rows, axis=0)
    return MetricsReport(*(float(v) for v in mean), degenerate=degenerate)
