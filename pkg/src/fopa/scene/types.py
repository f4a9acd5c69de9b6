"""Plain data types for scenes, placements and sparse pixel annotations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent data (manifests, annotations)."""


class InputError(ValueError):
    """Geometrically impossible request, e.g. an empty or oversized object."""


class Box(NamedTuple):
    """Half-open pixel rectangle: rows [top, bottom), columns [left, right)."""

    top: int
    left: int
    bottom: int
    right: int

    @property
    def area(self) -> int:
        return max(0, self.bottom - self.top) * max(0, self.right - self.left)

    def overlaps(self, other: "Box") -> bool:
        return self.top < other.bottom and other.top < self.bottom and self.left < other.right and other.left < self.right


@dataclass
class Background:
    id: str
    pixels: np.ndarray  # H×W×3 uint8
    floor_top_row: int
    obstacles: list[Box] = field(default_factory=list)

    def __post_init__(self):
        h, w = self.pixels.shape[:2]
        if not 0 <= self.floor_top_row < h:
            raise InputError(f"floor_top_row {self.floor_top_row} outside [0, {h})")
        for b in self.obstacles:
            if not (0 <= b.top < b.bottom <= h and 0 <= b.left < b.right <= w):
                raise InputError(f"obstacle {b} outside the {h}×{w} image")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class ForegroundObject:
    id: str
    pixels: np.ndarray  # h×w×3 uint8
    mask: np.ndarray  # h×w uint8 in {0, 1}

    def __post_init__(self):
        if self.mask.shape != self.pixels.shape[:2]:
            raise InputError("mask and pixels differ in size")
        if not np.isin(self.mask, (0, 1)).all():
            raise InputError("mask values must be 0 or 1")
        if not self.mask.any():
            raise InputError("mask is empty")

    @property
    def base_height(self) -> int:
        return self.pixels.shape[0]

    @property
    def base_width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class Placement:
    scale: float
    x: int  # column of the object centre
    y: int  # row of the object centre

    def __post_init__(self):
        if not self.scale > 0:
            raise InputError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class PixelAnnotation:
    x: int
    y: int
    label: int


@dataclass
class AnnotatedPair:
    pair_id: str
    fg_id: str
    bg_id: str
    scale: float
    annotations: list[PixelAnnotation]

    def __post_init__(self):
        if not self.annotations:
            raise DataError(f"pair {self.pair_id} has no annotations")
        seen = set()
        for a in self.annotations:
            if (a.x, a.y) in seen:
                raise DataError(f"pair {self.pair_id}: duplicate annotation at ({a.x}, {a.y})")
            seen.add((a.x, a.y))

    @property
    def labels(self) -> np.ndarray:
        return np.array([a.label for a in self.annotations], dtype=np.int64)


@dataclass
class FopaInput:
    fg_canvas: np.ndarray  # H×W×3 uint8, object centred on black (O′)
    mask_canvas: np.ndarray  # H×W uint8 (M′)
    bg_canvas: np.ndarray  # H×W×3 uint8
    zero_mask: np.ndarray  # H×W zeros

    def network_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(fg, bg) as 4×H×W float arrays: RGB scaled to [0, 1] plus the mask channel."""
        return _stack(self.fg_canvas, self.mask_canvas), _stack(self.bg_canvas, self.zero_mask)


@dataclass
class OneHotScaleInput:
    fg_full: np.ndarray  # H×W×3, object stretched to fill the canvas
    mask_full: np.ndarray  # H×W
    bg_canvas: np.ndarray
    zero_mask: np.ndarray
    scale_onehot: np.ndarray  # b-dim, exactly one 1

    @property
    def bin(self) -> int:
        return int(np.argmax(self.scale_onehot))

    def network_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return _stack(self.fg_full, self.mask_full), _stack(self.bg_canvas, self.zero_mask)


def _stack(rgb: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.concatenate([rgb.transpose(2, 0, 1) / 255.0, mask[None].astype(np.float64)], axis=0)
