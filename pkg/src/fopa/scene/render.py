"""Nearest-neighbour scaling and mask-blended pasting."""

from __future__ import annotations

import numpy as np

from .types import Background, Box, ForegroundObject, InputError, Placement


def scaled_size(fg: ForegroundObject, scale: float) -> tuple[int, int]:
    """(height, width) of ``fg`` after scaling; raises on a degenerate result."""
    h = int(np.floor(fg.base_height * scale + 0.5))
    w = int(np.floor(fg.base_width * scale + 0.5))
    if h < 1 or w < 1:
        raise InputError(f"scale {scale} shrinks {fg.base_height}×{fg.base_width} object to {h}×{w}")
    return h, w


def resize_nearest(img: np.ndarray, h: int, w: int) -> np.ndarray:
    """Nearest-neighbour resize sampling source pixel centres."""
    sh, sw = img.shape[:2]
    if (sh, sw) == (h, w):
        return img.copy()
    rows = np.minimum(((np.arange(h) + 0.5) * sh / h).astype(np.int64), sh - 1)
    cols = np.minimum(((np.arange(w) + 0.5) * sw / w).astype(np.int64), sw - 1)
    return img[rows[:, None], cols[None, :]]


def scale_object(fg: ForegroundObject, scale: float) -> tuple[np.ndarray, np.ndarray]:
    h, w = scaled_size(fg, scale)
    return resize_nearest(fg.pixels, h, w), resize_nearest(fg.mask, h, w)


def placement_box(h: int, w: int, x: int, y: int) -> Box:
    """Box of an h×w object centred at column ``x``, row ``y`` (may extend past borders)."""
    top = y - h // 2
    left = x - w // 2
    return Box(top, left, top + h, left + w)


def compose(bg: Background, fg: ForegroundObject, p: Placement) -> tuple[np.ndarray, np.ndarray]:
    """Paste the scaled foreground centred at ``(p.x, p.y)``.

    Returns the composite RGB image (uint8) and the composite mask marking
    pasted object pixels; parts of the object past the border are cropped.
    """
    pix, mask = scale_object(fg, p.scale)
    return paste(bg.pixels, pix, mask, p.x, p.y)


def paste(canvas: np.ndarray, pix: np.ndarray, mask: np.ndarray, x: int, y: int) -> tuple[np.ndarray, np.ndarray]:
    H, W = canvas.shape[:2]
    box = placement_box(mask.shape[0], mask.shape[1], x, y)
    out = canvas.copy()
    out_mask = np.zeros((H, W), dtype=np.uint8)
    t, l = max(box.top, 0), max(box.left, 0)
    b, r = min(box.bottom, H), min(box.right, W)
    if t >= b or l >= r:
        return out, out_mask
    src = (slice(t - box.top, b - box.top), slice(l - box.left, r - box.left))
    m = mask[src].astype(bool)
    region = out[t:b, l:r]
    region[m] = pix[src][m]
    out_mask[t:b, l:r] = m
    return out, out_mask
