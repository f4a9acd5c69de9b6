"""Binary netpbm (P5 greyscale, P6 RGB) with maxval 255."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class NetpbmError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (at byte {offset})")
        self.offset = offset


def encode(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError(f"netpbm images must be uint8, got {img.dtype}")
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"expected H×W or H×W×3 image, got shape {img.shape}")
    h, w = img.shape[:2]
    return magic + f"\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img).tobytes()


def decode(data: bytes) -> np.ndarray:
    if data[:2] not in (b"P5", b"P6"):
        raise NetpbmError(f"bad magic {data[:2]!r}, expected P5 or P6", 0)
    channels = 3 if data[:2] == b"P6" else 1
    pos = 2
    fields = []
    while len(fields) < 3:
        # whitespace and comments between header fields
        while pos < len(data) and (data[pos : pos + 1].isspace() or data[pos : pos + 1] == b"#"):
            if data[pos : pos + 1] == b"#":
                end = data.find(b"\n", pos)
                pos = len(data) if end < 0 else end + 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise NetpbmError("expected a decimal header field", start)
        fields.append((int(data[start:pos]), start))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise NetpbmError("header must end with a single whitespace byte", pos)
    pos += 1
    (w, _), (h, _), (maxval, mpos) = fields
    if maxval != 255:
        raise NetpbmError(f"maxval {maxval} unsupported, only 255", mpos)
    if w < 1 or h < 1:
        raise NetpbmError(f"image size {w}×{h} must be positive", fields[0][1])
    n = w * h * channels
    if len(data) - pos < n:
        raise NetpbmError(f"raster truncated: need {n} bytes, have {len(data) - pos}", pos)
    raster = np.frombuffer(data, dtype=np.uint8, count=n, offset=pos)
    return raster.reshape((h, w, 3) if channels == 3 else (h, w)).copy()


def write_image(path, img: np.ndarray) -> None:
    Path(path).write_bytes(encode(img))


def read_image(path) -> np.ndarray:
    return decode(Path(path).read_bytes())


def heatmap_pixels(scores: np.ndarray) -> np.ndarray:
    """Scores in [0, 1] → uint8 via ``floor(255·s + 0.5)`` (round half up)."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size and (s.min() < 0 or s.max() > 1):
        raise ValueError("heatmap scores must lie in [0, 1]")
    return np.floor(255.0 * s + 0.5).astype(np.uint8)


def write_heatmap(path, scores: np.ndarray) -> None:
    write_image(path, heatmap_pixels(scores))
