"""Score maps from both assessors, scores at annotated pixels, and composite selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, no_grad, ops
from ..models import FopaModel, SopaModel
from ..scene import AnnotatedPair, Background, Corpus, ForegroundObject, Placement, compose, composite_array
from ..training.loops import composite_dataset, network_inputs, pair_arrays
from .metrics import f1_and_bacc


def fopa_score_maps(model: FopaModel, corpus: Corpus, pairs: list[AnnotatedPair], batch: int = 16) -> np.ndarray:
    """P×H×W score maps, one forward pass per pair batch."""
    arrs = pair_arrays(corpus, pairs, model.cfg)
    maps = []
    with no_grad():
        for s in range(0, len(pairs), batch):
            hot = arrs.onehot[s : s + batch] if arrs.onehot is not None else None
            maps.append(model(Tensor(arrs.fg[s : s + batch]), Tensor(arrs.bg[s : s + batch]), hot).scores.data)
    return np.concatenate(maps)


def fopa_annotated_scores(model: FopaModel, corpus: Corpus, pairs: list[AnnotatedPair]) -> tuple[np.ndarray, np.ndarray]:
    """Scores and labels at every annotated pixel, read off the dense maps."""
    maps = fopa_score_maps(model, corpus, pairs)
    arrs = pair_arrays(corpus, pairs, model.cfg)
    return maps[arrs.pair_index, arrs.rows, arrs.cols], arrs.labels


def sopa_annotated_scores(model: SopaModel, corpus: Corpus, pairs: list[AnnotatedPair], batch: int = 64):
    """Scores and labels at every annotated pixel, one composite per pixel."""
    x, y = composite_dataset(corpus, pairs, model.cfg.size)
    out = []
    with no_grad():
        for s in range(0, len(y), batch):
            out.append(ops.sigmoid(model(Tensor(x[s : s + batch]))[0]).data)
    return np.concatenate(out), y


def evaluate(model, corpus: Corpus, split: str = "test", threshold: float = 0.5) -> tuple[float, float]:
    pairs = corpus.split(split)
    if isinstance(model, SopaModel):
        scores, labels = sopa_annotated_scores(model, corpus, pairs)
    else:
        scores, labels = fopa_annotated_scores(model, corpus, pairs)
    return f1_and_bacc(scores, labels, threshold)


def sopa_enumerate_map(
    bg: Background, fg: ForegroundObject, scale: float, sopa: SopaModel, batch: int = 1
) -> np.ndarray:
    """Score every grid location by compositing there and running SOPA.

    Issues exactly ``H·W`` model passes; with ``batch=1`` they run one at a
    time, which is what the timing comparison measures.
    """
    H = W = sopa.cfg.size
    out = np.empty(H * W)
    coords = [(x, y) for y in range(H) for x in range(W)]
    with no_grad():
        for s in range(0, len(coords), batch):
            chunk = coords[s : s + batch]
            xs = np.stack([composite_array(bg, fg, Placement(scale, x, y), H) for x, y in chunk])
            out[s : s + len(chunk)] = ops.sigmoid(sopa(Tensor(xs))[0]).data
    return out.reshape(H, W)


def fopa_map(model: FopaModel, bg: Background, fg: ForegroundObject, scale: float) -> np.ndarray:
    """H×W score map for one pair in a single pass."""
    f, b, hot = network_inputs(bg, fg, scale, model.cfg)
    with no_grad():
        out = model(Tensor(f[None]), Tensor(b[None]), None if hot is None else hot[None])
    return out.scores.data[0]


@dataclass(frozen=True)
class Pick:
    x: int
    y: int
    score: float
    rgb: np.ndarray
    mask: np.ndarray


def select_composites(
    score_map: np.ndarray, bg: Background, fg: ForegroundObject, scale: float
) -> tuple[Pick, Pick]:
    """Composites at the highest and lowest scores; ties go to the first pixel in row-major order."""
    m = np.asarray(score_map)
    if m.size == 0:
        raise ValueError("empty score map")
    picks = []
    for flat in (int(np.argmax(m)), int(np.argmin(m))):
        y, x = divmod(flat, m.shape[1])
        rgb, mask = compose(bg, fg, Placement(scale, x, y))
        picks.append(Pick(x, y, float(m[y, x]), rgb, mask))
    return picks[0], picks[1]
