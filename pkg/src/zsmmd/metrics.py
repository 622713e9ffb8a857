"""Confusion-matrix segmentation metrics: PA, MA, mIoU over class subsets, and hIoU."""
from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError

IGNORE_LABEL = 255


class ConfusionMatrix:
    """Rows are ground truth, columns are predictions; ignore pixels are dropped."""

    def __init__(self, num_classes: int, counts: np.ndarray | None = None):
        self.num_classes = num_classes
        if counts is None:
            counts = np.zeros((num_classes, num_classes), dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (num_classes, num_classes):
            raise ShapeError(f"counts must be {num_classes}x{num_classes}")

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.num_classes != self.num_classes:
            raise ShapeError("cannot merge confusion matrices of different size")
        return ConfusionMatrix(self.num_classes, self.counts + other.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def accumulate(cm: ConfusionMatrix, pred_labels, gt_labels) -> ConfusionMatrix:
    pred = np.asarray(pred_labels, dtype=np.int64).reshape(-1)
    gt = np.asarray(gt_labels, dtype=np.int64).reshape(-1)
    if np.shape(pred_labels) != np.shape(gt_labels):
        raise ShapeError(f"prediction shape {np.shape(pred_labels)} != label shape {np.shape(gt_labels)}")
    n = cm.num_classes
    keep = gt != IGNORE_LABEL
    pred, gt = pred[keep], gt[keep]
    for name, arr in (("ground-truth", gt), ("predicted", pred)):
        bad = (arr < 0) | (arr >= n)
        if bad.any():
            raise DomainError(f"{name} label {int(arr[bad][0])} outside [0, {n}) and not ignore")
    counts = np.bincount(gt * n + pred, minlength=n * n).reshape(n, n)
    return ConfusionMatrix(n, cm.counts + counts)


def compute_metrics(cm: ConfusionMatrix, subset) -> dict[str, float]:
    """PA, MA and mIoU restricted to ``subset``; classes with no ground truth are skipped."""
    ids = np.array(sorted(set(int(c) for c in subset)), dtype=np.int64)
    if ids.size == 0:
        raise DomainError("metric subset is empty")
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)[ids]
    rows = counts.sum(axis=1)[ids]
    cols = counts.sum(axis=0)[ids]
    present = rows > 0
    if not present.any():
        raise DomainError(f"no ground-truth pixels for any class in {ids.tolist()}")
    tp, rows, cols = tp[present], rows[present], cols[present]
    return {
        "PA": float(tp.sum() / rows.sum()),
        "MA": float(np.mean(tp / rows)),
        "mIoU": float(np.mean(tp / (rows + cols - tp))),
    }


def hiou(seen_miou: float, unseen_miou: float) -> float:
    if seen_miou < 0 or unseen_miou < 0:
        raise DomainError("mIoU values must be non-negative")
    if seen_miou + unseen_miou == 0:
        raise DomainError("hIoU undefined when both mIoU values are zero")
    return 2.0 * seen_miou * unseen_miou / (seen_miou + unseen_miou)
