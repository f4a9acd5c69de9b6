"""Rule-based placement rationality: the synthetic corpus's ground truth.

A placement is reasonable iff all of

* the scaled object's bottom row lies in the ground band,
* its bounding box touches no obstacle,
* its height is consistent with depth at the centre row
  (``0.5·h0·y/H <= h <= 1.5·h0·y/H``),
* under 10% of its mask pixels fall outside the image.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .render import placement_box, scale_object
from .types import Background, ForegroundObject, Placement

MAX_CROP_FRACTION = 0.1
DEPTH_LOW = 0.5
DEPTH_HIGH = 1.5


def nominal_height(bg: Background, h0: Optional[float] = None) -> float:
    return 0.5 * bg.height if h0 is None else float(h0)


def oracle_label(bg: Background, fg: ForegroundObject, p: Placement, h0: Optional[float] = None) -> int:
    _, mask = scale_object(fg, p.scale)
    h, w = mask.shape
    H, W = bg.height, bg.width
    box = placement_box(h, w, p.x, p.y)

    bottom_row = box.bottom - 1
    if not bg.floor_top_row <= bottom_row < H:
        return 0
    if any(box.overlaps(ob) for ob in bg.obstacles):
        return 0
    depth = nominal_height(bg, h0) * p.y / H
    if not DEPTH_LOW * depth <= h <= DEPTH_HIGH * depth:
        return 0
    t, l = max(box.top, 0), max(box.left, 0)
    b, r = min(box.bottom, H), min(box.right, W)
    visible = int(mask[t - box.top : b - box.top, l - box.left : r - box.left].sum()) if t < b and l < r else 0
    total = int(mask.sum())
    if (total - visible) >= MAX_CROP_FRACTION * total:
        return 0
    return 1


def label_map(bg: Background, fg: ForegroundObject, scale: float, h0: Optional[float] = None) -> np.ndarray:
    """Oracle label for every centre location at once, as an H×W uint8 array (rows = y)."""
    _, mask = scale_object(fg, scale)
    h, w = mask.shape
    H, W = bg.height, bg.width
    ys = np.arange(H)
    xs = np.arange(W)
    tops = ys - h // 2
    lefts = xs - w // 2

    bottom = tops + h - 1
    ok_y = (bottom >= bg.floor_top_row) & (bottom < H)
    depth = nominal_height(bg, h0) * ys / H
    ok_y &= (DEPTH_LOW * depth <= h) & (h <= DEPTH_HIGH * depth)
    ok = np.broadcast_to(ok_y[:, None], (H, W)).copy()

    for ob in bg.obstacles:
        hit_y = (tops < ob.bottom) & (ob.top < tops + h)
        hit_x = (lefts < ob.right) & (ob.left < lefts + w)
        ok &= ~(hit_y[:, None] & hit_x[None, :])

    # visible mask pixels via a zero-padded summed-area table
    sat = np.zeros((h + 1, w + 1), dtype=np.int64)
    sat[1:, 1:] = mask.astype(np.int64).cumsum(0).cumsum(1)
    r0 = np.clip(-tops, 0, h)
    r1 = np.clip(H - tops, 0, h)
    c0 = np.clip(-lefts, 0, w)
    c1 = np.clip(W - lefts, 0, w)
    visible = (
        sat[r1[:, None], c1[None, :]]
        - sat[r0[:, None], c1[None, :]]
        - sat[r1[:, None], c0[None, :]]
        + sat[r0[:, None], c0[None, :]]
    )
    total = int(mask.sum())
    ok &= (total - visible) < MAX_CROP_FRACTION * total
    return ok.astype(np.uint8)
