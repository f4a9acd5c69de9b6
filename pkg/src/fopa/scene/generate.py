"""Synthetic scenes: sky/ground backgrounds with obstacles, silhouette foregrounds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .annotations import convert_annotations
from .oracle import label_map
from .types import AnnotatedPair, Background, Box, ForegroundObject

SHAPES = ("ellipse", "box", "triangle")


@dataclass
class CorpusSpec:
    seed: int = 7
    n_backgrounds: int = 16
    n_foregrounds: int = 16
    scales_per_pair: int = 2
    image_size: int = 64
    test_fraction: float = 0.3
    positives_per_pair: int = 2
    negatives_per_pair: int = 2
    min_height: int = 5
    max_height: int = 20


@dataclass
class Corpus:
    spec: CorpusSpec
    backgrounds: dict[str, Background]
    foregrounds: dict[str, ForegroundObject]
    train: list[AnnotatedPair] = field(default_factory=list)
    test: list[AnnotatedPair] = field(default_factory=list)
    records: list[tuple] = field(default_factory=list)

    def split(self, name: str) -> list[AnnotatedPair]:
        if name not in ("train", "test"):
            raise ValueError(f"unknown split {name!r}")
        return self.train if name == "train" else self.test

    def pair(self, pair_id: str) -> AnnotatedPair:
        for p in self.train + self.test:
            if p.pair_id == pair_id:
                return p
        raise KeyError(pair_id)


def make_background(rng: np.random.Generator, bg_id: str, size: int) -> Background:
    H = W = size
    floor = int(rng.integers(int(0.3 * H), int(0.6 * H) + 1))
    img = np.empty((H, W, 3), dtype=np.float64)
    sky_top = rng.uniform([90, 140, 200], [130, 180, 240])
    sky_bot = rng.uniform([170, 200, 230], [210, 230, 255])
    t = np.linspace(0, 1, floor)[:, None, None]
    img[:floor] = sky_top * (1 - t) + sky_bot * t
    ground = rng.uniform([60, 90, 30], [130, 150, 80])
    img[floor:] = ground
    img += rng.normal(0, 6, img.shape)
    obstacles = []
    for _ in range(int(rng.integers(0, 4))):
        bw = int(rng.integers(5, 15))
        bh = int(rng.integers(6, 18))
        bottom = int(rng.integers(floor + 2, H + 1))
        left = int(rng.integers(0, W - bw + 1))
        box = Box(max(bottom - bh, 0), left, bottom, left + bw)
        obstacles.append(box)
        img[box.top : box.bottom, box.left : box.right] = rng.uniform([40, 40, 40], [110, 90, 80])
    pixels = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return Background(bg_id, pixels, floor, obstacles)


def make_foreground(rng: np.random.Generator, fg_id: str) -> ForegroundObject:
    shape = SHAPES[int(rng.integers(len(SHAPES)))]
    h = int(rng.integers(16, 33))
    w = int(rng.integers(8, 33))
    yy, xx = np.mgrid[0:h, 0:w]
    if shape == "ellipse":
        mask = ((yy + 0.5 - h / 2) / (h / 2)) ** 2 + ((xx + 0.5 - w / 2) / (w / 2)) ** 2 <= 1.0
    elif shape == "box":
        mask = np.ones((h, w), dtype=bool)
    else:
        # apex at the top centre, base along the bottom row
        half = (yy + 1) / h * (w / 2)
        mask = np.abs(xx + 0.5 - w / 2) <= half
    rows = np.flatnonzero(mask.any(1))
    cols = np.flatnonzero(mask.any(0))
    mask = mask[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    color = rng.uniform([150, 20, 20], [255, 120, 255])
    shade = 1.0 - 0.3 * np.linspace(0, 1, mask.shape[0])[:, None, None]
    pix = np.clip(np.rint(color * shade * np.ones(mask.shape + (3,))), 0, 255).astype(np.uint8)
    pix[~mask] = 0
    return ForegroundObject(fg_id, pix, mask.astype(np.uint8))


def _pick_scale(rng, bg, fg, spec: CorpusSpec, used: set) -> tuple[float, np.ndarray] | None:
    for _ in range(50):
        target = int(rng.integers(spec.min_height, spec.max_height + 1))
        scale = target / fg.base_height
        if scale in used:
            continue
        labels = label_map(bg, fg, scale)
        n_pos = int(labels.sum())
        if n_pos >= spec.positives_per_pair and labels.size - n_pos >= spec.negatives_per_pair:
            return scale, labels
    return None


def _sample_pixels(rng, labels: np.ndarray, value: int, count: int) -> list[tuple[int, int]]:
    ys, xs = np.nonzero(labels == value)
    idx = rng.choice(len(ys), size=count, replace=False)
    return [(int(xs[i]), int(ys[i])) for i in sorted(idx)]


def generate_corpus(seed: int = 7, n_backgrounds: int = 16, n_foregrounds: int = 16, scales_per_pair: int = 2, **kw) -> Corpus:
    """Build a deterministic synthetic corpus.

    Every (foreground, background) combination gets ``scales_per_pair``
    distinct scales, each annotated with oracle-labelled positive and negative
    pixels.  Backgrounds and foregrounds are each split into disjoint train
    and test sets; a pair goes to a split only when both of its members do,
    so combinations that straddle the split are discarded.
    """
    spec = CorpusSpec(seed, n_backgrounds, n_foregrounds, scales_per_pair, **kw)
    if min(n_backgrounds, n_foregrounds, scales_per_pair) < 1:
        raise ValueError("corpus counts must be >= 1")
    rng = np.random.default_rng(seed)
    bgs = [make_background(rng, f"bg{i:03d}", spec.image_size) for i in range(n_backgrounds)]
    fgs = [make_foreground(rng, f"fg{i:03d}") for i in range(n_foregrounds)]

    test_bg = _test_ids(rng, [b.id for b in bgs], spec.test_fraction)
    test_fg = _test_ids(rng, [f.id for f in fgs], spec.test_fraction)

    records = []
    pair_no = 0
    for fg in fgs:
        for bg in bgs:
            used: set = set()
            for _ in range(scales_per_pair):
                picked = _pick_scale(rng, bg, fg, spec, used)
                if picked is None:
                    raise RuntimeError(f"no scale of {fg.id} on {bg.id} yields both labels")
                scale, labels = picked
                used.add(scale)
                pid = f"p{pair_no:05d}"
                pair_no += 1
                pts = [(x, y, 1) for x, y in _sample_pixels(rng, labels, 1, spec.positives_per_pair)]
                pts += [(x, y, 0) for x, y in _sample_pixels(rng, labels, 0, spec.negatives_per_pair)]
                for x, y, lab in pts:
                    records.append((pid, fg.id, bg.id, scale, x, y, lab))

    pairs = convert_annotations(records)
    train, test = [], []
    for p in pairs:
        in_test = (p.fg_id in test_fg, p.bg_id in test_bg)
        if in_test == (False, False):
            train.append(p)
        elif in_test == (True, True):
            test.append(p)
    return Corpus(spec, {b.id: b for b in bgs}, {f.id: f for f in fgs}, train, test, records)


def _test_ids(rng, ids: list[str], fraction: float) -> set[str]:
    if len(ids) < 2:
        return set()
    n_test = min(len(ids) - 1, max(1, int(round(len(ids) * fraction))))
    return {ids[i] for i in rng.choice(len(ids), size=n_test, replace=False)}
