"""Box overlap ratios.

Areas are width * height in continuous coordinates; there is no +1
pixel-inclusive convention. Areas are taken from the corner coordinates
(``right - left``) exactly as the intersection is, so a box overlaps itself
with a ratio of exactly 1.0.
"""

from __future__ import annotations

import numpy as np

from .core_types import BoundingBox


def _intersection(a: BoundingBox, b: BoundingBox) -> float:
    w = min(a.right, b.right) - max(a.left, b.left)
    h = min(a.bottom, b.bottom) - max(a.top, b.top)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def _area(a: BoundingBox) -> float:
    return (a.right - a.left) * (a.bottom - a.top)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union (Jaccard index) of two boxes."""
    inter = _intersection(a, b)
    if inter == 0.0:
        return 0.0
    return min(1.0, inter / (_area(a) + _area(b) - inter))


def intersection_over_first(a: BoundingBox, b: BoundingBox) -> float:
    """Fraction of ``a`` covered by ``b``."""
    return min(1.0, _intersection(a, b) / _area(a))


def _corners(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    return np.stack([a[:, 0], a[:, 1], a[:, 0] + a[:, 2], a[:, 1] + a[:, 3]], axis=1)


def _corner_area(c: np.ndarray) -> np.ndarray:
    return (c[:, 2] - c[:, 0]) * (c[:, 3] - c[:, 1])


def _pairwise_intersection(ca: np.ndarray, cb: np.ndarray) -> np.ndarray:
    w = np.minimum(ca[:, None, 2], cb[None, :, 2]) - np.maximum(ca[:, None, 0], cb[None, :, 0])
    h = np.minimum(ca[:, None, 3], cb[None, :, 3]) - np.maximum(ca[:, None, 1], cb[None, :, 1])
    return np.clip(w, 0, None) * np.clip(h, 0, None)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between rows of ``a`` (n, 4) and ``b`` (m, 4) in ltwh form."""
    ca, cb = _corners(a), _corners(b)
    inter = _pairwise_intersection(ca, cb)
    union = _corner_area(ca)[:, None] + _corner_area(cb)[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(inter > 0, inter / union, 0.0)
    return np.minimum(out, 1.0)


def ioa_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise intersection over the area of the ``a`` box."""
    ca, cb = _corners(a), _corners(b)
    inter = _pairwise_intersection(ca, cb)
    return np.minimum(inter / _corner_area(ca)[:, None], 1.0)
