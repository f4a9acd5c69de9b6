"""Network inputs: the centred foreground canvas, the one-hot scale variant, composites."""

from __future__ import annotations

import numpy as np

from .render import compose, paste, resize_nearest, scale_object
from .types import Background, FopaInput, ForegroundObject, InputError, OneHotScaleInput, Placement, _stack

DEFAULT_BINS = (8, 16, 32)


def prepare_fopa_input(bg: Background, fg: ForegroundObject, scale: float, size: int) -> FopaInput:
    """Centre the scaled object on a black background-sized canvas, then resize everything to ``size``."""
    pix, mask = scale_object(fg, scale)
    H, W = bg.height, bg.width
    if mask.shape[0] > H or mask.shape[1] > W:
        raise InputError(f"scaled object {mask.shape[0]}×{mask.shape[1]} does not fit the {H}×{W} canvas")
    canvas, canvas_mask = paste(np.zeros_like(bg.pixels), pix, mask, W // 2, H // 2)
    return FopaInput(
        fg_canvas=resize_nearest(canvas, size, size),
        mask_canvas=resize_nearest(canvas_mask, size, size),
        bg_canvas=resize_nearest(bg.pixels, size, size),
        zero_mask=np.zeros((size, size), dtype=np.uint8),
    )


def scale_bin(scale_fraction: float, bins: int) -> int:
    """``floor(fraction · bins)`` clamped to ``[0, bins - 1]``."""
    if bins < 2:
        raise ValueError("need at least two bins")
    return int(min(max(np.floor(scale_fraction * bins), 0), bins - 1))


def prepare_onehot_input(bg: Background, fg: ForegroundObject, scale: float, bins: int, size: int) -> OneHotScaleInput:
    """Stretch the object over the whole canvas and carry its scale as a one-hot bin."""
    h, _ = scale_object(fg, scale)[1].shape
    onehot = np.zeros(bins)
    onehot[scale_bin(h / bg.height, bins)] = 1.0
    return OneHotScaleInput(
        fg_full=resize_nearest(fg.pixels, size, size),
        mask_full=resize_nearest(fg.mask, size, size),
        bg_canvas=resize_nearest(bg.pixels, size, size),
        zero_mask=np.zeros((size, size), dtype=np.uint8),
        scale_onehot=onehot,
    )


def composite_array(bg: Background, fg: ForegroundObject, p: Placement, size: int) -> np.ndarray:
    """4×size×size SOPA input: composite RGB in [0, 1] and the composite mask."""
    rgb, mask = compose(bg, fg, p)
    if rgb.shape[0] != size or rgb.shape[1] != size:
        rgb, mask = resize_nearest(rgb, size, size), resize_nearest(mask, size, size)
    return _stack(rgb, mask)
