"""Occupancy and semantic evaluation: geometric IoU, per-class IoU, mIoU.

Label volumes use 0 = empty, 1..N = semantic classes, 255 = ignore.
Conventions follow SemanticKITTI practice: empty-vs-empty IoU is 1.0, and
classes absent from both prediction and ground truth are excluded from the
mean.
"""

from dataclasses import dataclass

import numpy as np

IGNORE = 255


@dataclass
class LabelVolume:
    data: np.ndarray  # (H, W, L) integer labels

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise ValueError("label volume must be 3D")

    @property
    def dims(self):
        return self.data.shape


def _check_dims(pred: LabelVolume, gt: LabelVolume):
    if pred.dims != gt.dims:
        raise ValueError(f"dim mismatch: {pred.dims} vs {gt.dims}")


def geometric_iou(pred: LabelVolume, gt: LabelVolume) -> float:
    """Occupied-vs-empty IoU, ignoring voxels labeled 255 in either volume."""
    _check_dims(pred, gt)
    keep = (pred.data != IGNORE) & (gt.data != IGNORE)
    p = (pred.data > 0) & keep
    g = (gt.data > 0) & keep
    union = np.count_nonzero(p | g)
    if union == 0:
        return 1.0
    return np.count_nonzero(p & g) / union


def semantic_miou(pred: LabelVolume, gt: LabelVolume, n_classes: int):
    """Per-class IoU over classes 1..N plus their mean.

    Returns (per_class, miou) where per_class maps class -> IoU or None for
    classes with no prediction-or-truth occurrences (excluded from the mean).
    """
    _check_dims(pred, gt)
    keep = (pred.data != IGNORE) & (gt.data != IGNORE)
    p = pred.data[keep]
    g = gt.data[keep]
    per_class = {}
    included = []
    for c in range(1, n_classes + 1):
        tp = np.count_nonzero((p == c) & (g == c))
        fp = np.count_nonzero((p == c) & (g != c))
        fn = np.count_nonzero((p != c) & (g == c))
        if tp + fp + fn == 0:
            per_class[c] = None
            continue
        iou = tp / (tp + fp + fn)
        per_class[c] = iou
        included.append(iou)
    miou = float(np.mean(included)) if included else 1.0
    return per_class, miou


def precision_recall(pred: LabelVolume, gt: LabelVolume):
    """Occupancy precision/recall from the same confusion counts as the IoU."""
    _check_dims(pred, gt)
    keep = (pred.data != IGNORE) & (gt.data != IGNORE)
    p = (pred.data > 0) & keep
    g = (gt.data > 0) & keep
    tp = np.count_nonzero(p & g)
    prec = tp / max(np.count_nonzero(p), 1)
    rec = tp / max(np.count_nonzero(g), 1)
    return prec, rec
