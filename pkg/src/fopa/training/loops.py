"""Two-stage training: SOPA on rendered composites, then FOPA distilled from it."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, TextIO

import numpy as np

from ..autodiff import Tensor, backward, no_grad, ops
from ..config import DESK, ModelConfig, TrainConfig, model_config_for
from ..models import FopaModel, SopaModel, transfer_background_prior
from ..scene import AnnotatedPair, Corpus, Placement, composite_array, prepare_fopa_input, prepare_onehot_input
from .losses import bce_loss, mimic_loss, total_loss
from .optim import Adam

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "lr", "L_bce", "L_mimic", "L_total", "train_bAcc")


class TrainingError(RuntimeError):
    pass


class NumericError(FloatingPointError):
    """A loss went NaN or infinite."""


@dataclass
class EpochStats:
    epoch: int
    lr: float
    bce: float
    mimic: float
    total: float
    bacc: float

    def line(self) -> str:
        return f"{self.epoch}\t{self.lr:.8g}\t{self.bce:.6f}\t{self.mimic:.6f}\t{self.total:.6f}\t{self.bacc:.4f}"


class EpochLog:
    """Tab-separated per-epoch lines to any number of text streams."""

    def __init__(self, *streams: TextIO):
        self.streams = [s for s in streams if s is not None]
        self.rows: list[EpochStats] = []
        self._emit("\t".join(LOG_COLUMNS))

    def _emit(self, text: str) -> None:
        for s in self.streams:
            s.write(text + "\n")
            s.flush()

    def add(self, stats: EpochStats) -> None:
        if not all(math.isfinite(v) for v in (stats.bce, stats.mimic, stats.total)):
            self._emit(stats.line())
            raise NumericError(f"non-finite loss at epoch {stats.epoch}")
        self.rows.append(stats)
        self._emit(stats.line())


def balanced_accuracy(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    pred = scores >= threshold
    pos = labels == 1
    tpr = pred[pos].mean() if pos.any() else 0.0
    tnr = (~pred[~pos]).mean() if (~pos).any() else 0.0
    return float((tpr + tnr) / 2)


# ---------------------------------------------------------------------------
# SOPA
# ---------------------------------------------------------------------------


def composite_dataset(corpus: Corpus, pairs: list[AnnotatedPair], size: int) -> tuple[np.ndarray, np.ndarray]:
    """Every annotated placement rendered as a 4×size×size composite, with its label."""
    xs, ys = [], []
    for p in pairs:
        bg, fg = corpus.backgrounds[p.bg_id], corpus.foregrounds[p.fg_id]
        for a in p.annotations:
            xs.append(composite_array(bg, fg, Placement(p.scale, a.x, a.y), size))
            ys.append(a.label)
    return np.stack(xs), np.array(ys, dtype=np.int64)


def train_sopa(
    corpus: Corpus,
    config: TrainConfig,
    model_cfg: ModelConfig = DESK,
    epoch_log: Optional[EpochLog] = None,
) -> SopaModel:
    x_all, y_all = composite_dataset(corpus, corpus.train, model_cfg.size)
    if len(np.unique(y_all)) < 2:
        raise TrainingError("SOPA training needs both positive and negative composites")
    rng = np.random.default_rng(config.seed)
    model = SopaModel(model_cfg, rng)
    opt = Adam(model.parameters(), config.lr)
    for epoch in range(1, config.epochs + 1):
        opt.lr = config.lr_at(epoch)
        order = rng.permutation(len(y_all))
        total, scores = 0.0, np.empty(len(y_all))
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            logits, _ = model(Tensor(x_all[idx]))
            probs = ops.sigmoid(logits)
            loss = bce_loss(probs, y_all[idx])
            backward(loss)
            opt.step()
            opt.zero_grad()
            total += loss.item()
            scores[idx] = probs.data
        if epoch_log is not None:
            epoch_log.add(EpochStats(epoch, opt.lr, total, 0.0, total, balanced_accuracy(scores, y_all)))
    return model


def sopa_dataset_loss(model: SopaModel, x: np.ndarray, y: np.ndarray, batch: int = 64) -> float:
    total = 0.0
    with no_grad():
        for s in range(0, len(y), batch):
            logits, _ = model(Tensor(x[s : s + batch]))
            total += bce_loss(ops.sigmoid(logits), y[s : s + batch]).item()
    return total


# ---------------------------------------------------------------------------
# FOPA
# ---------------------------------------------------------------------------


@dataclass
class PairArrays:
    """Network-ready arrays for a list of pairs."""

    fg: np.ndarray  # P×4×H×W
    bg: np.ndarray  # P×4×H×W
    onehot: Optional[np.ndarray]  # P×b or None
    pair_index: np.ndarray  # per annotation: index into the pair list
    rows: np.ndarray
    cols: np.ndarray
    labels: np.ndarray
    starts: np.ndarray  # annotation offset of each pair (length P + 1)


def network_inputs(bg, fg, scale: float, model_cfg: ModelConfig):
    """(foreground 4×H×W, background 4×H×W, one-hot or None) for the model's input variant."""
    if model_cfg.onehot_bins:
        inp = prepare_onehot_input(bg, fg, scale, model_cfg.onehot_bins, model_cfg.size)
        return (*inp.network_arrays(), inp.scale_onehot)
    return (*prepare_fopa_input(bg, fg, scale, model_cfg.size).network_arrays(), None)


def pair_arrays(corpus: Corpus, pairs: list[AnnotatedPair], model_cfg: ModelConfig) -> PairArrays:
    if model_cfg.size != corpus.spec.image_size:
        # annotations live on the image grid, which the score map must match
        raise TrainingError(f"model grid {model_cfg.size} differs from corpus image size {corpus.spec.image_size}")
    fgs, bgs, hots = [], [], []
    pidx, rows, cols, labels, starts = [], [], [], [], [0]
    for i, p in enumerate(pairs):
        f, b, hot = network_inputs(corpus.backgrounds[p.bg_id], corpus.foregrounds[p.fg_id], p.scale, model_cfg)
        fgs.append(f)
        bgs.append(b)
        if hot is not None:
            hots.append(hot)
        for a in p.annotations:
            pidx.append(i)
            rows.append(a.y)
            cols.append(a.x)
            labels.append(a.label)
        starts.append(len(labels))
    return PairArrays(
        np.stack(fgs),
        np.stack(bgs),
        np.stack(hots) if hots else None,
        np.array(pidx),
        np.array(rows),
        np.array(cols),
        np.array(labels),
        np.array(starts),
    )


def mimic_targets(sopa: SopaModel, corpus: Corpus, pairs: list[AnnotatedPair], batch: int = 32) -> np.ndarray:
    """SOPA penultimate feature of the composite at every annotated pixel, in annotation order."""
    comps, _ = composite_dataset(corpus, pairs, sopa.cfg.size)
    feats = []
    with no_grad():
        for s in range(0, len(comps), batch):
            feats.append(sopa(Tensor(comps[s : s + batch]))[1].data)
    return np.concatenate(feats)


def _batch_annotations(arrs: PairArrays, idx: np.ndarray):
    sel = np.concatenate([np.arange(arrs.starts[i], arrs.starts[i + 1]) for i in idx])
    local = np.searchsorted(idx, arrs.pair_index[sel]) if np.all(np.diff(idx) > 0) else None
    if local is None:
        pos = {p: j for j, p in enumerate(idx)}
        local = np.array([pos[p] for p in arrs.pair_index[sel]])
    return sel, local


def build_fopa(sopa: Optional[SopaModel], config: TrainConfig, model_cfg: ModelConfig, rng) -> FopaModel:
    model = FopaModel(model_cfg, rng)
    # zero pixel head: its sign comes from the first BCE step rather than from
    # whatever the mimic-driven trunk happens to align with
    model.classifier.weight.data[:] = 0.0
    if config.transfer:
        if sopa is None:
            raise TrainingError("background prior transfer needs a trained SOPA model")
        transfer_background_prior(sopa, model, freeze=config.freeze_encoder)
    else:
        model.frozen_bg_encoder = config.freeze_encoder
    return model


def train_fopa(
    corpus: Corpus,
    sopa: Optional[SopaModel],
    config: TrainConfig,
    model_cfg: Optional[ModelConfig] = None,
    epoch_log: Optional[EpochLog] = None,
    on_epoch: Optional[Callable[[int, FopaModel], None]] = None,
) -> FopaModel:
    """Train the dense assessor with ``L_bce + λ·L_mimic`` summed over annotated pixels.

    SOPA is only read: its encoder seeds the background branch and its
    penultimate features on the annotated composites are the mimic targets.
    """
    model_cfg = model_cfg or model_config_for(config)
    if (model_cfg.fusion_mode, model_cfg.n_scales, model_cfg.onehot_bins) != (
        config.fusion_mode,
        config.n_scales,
        config.onehot_bins,
    ):
        raise TrainingError("model config disagrees with training config on fusion/scales/one-hot bins")
    if sopa is not None and sopa.cfg.encoder != model_cfg.encoder:
        raise TrainingError("SOPA encoder config differs from the FOPA background encoder")
    lam = config.effective_lambda
    rng = np.random.default_rng(config.seed)
    model = build_fopa(sopa, config, model_cfg, rng)
    arrs = pair_arrays(corpus, corpus.train, model_cfg)
    targets = None
    if lam > 0:
        if sopa is None:
            raise TrainingError("feature mimicking needs a trained SOPA model")
        # SOPA is frozen, so targets are fixed for the whole run
        targets = mimic_targets(sopa, corpus, corpus.train)
        model.mimic_proj.bias.data = targets.mean(axis=0)
    opt = Adam(model.trainable_parameters(), config.lr)
    n_pairs = len(corpus.train)
    for epoch in range(1, config.epochs + 1):
        opt.lr = config.lr_at(epoch)
        order = rng.permutation(n_pairs)
        sums = np.zeros(3)
        scores = np.empty(len(arrs.labels))
        for start in range(0, n_pairs, config.batch_size):
            idx = np.sort(order[start : start + config.batch_size])
            sel, local = _batch_annotations(arrs, idx)
            onehot = arrs.onehot[idx] if arrs.onehot is not None else None
            out = model(Tensor(arrs.fg[idx]), Tensor(arrs.bg[idx]), onehot)
            picked = ops.gather_pixels(ops.reshape(out.scores, (len(idx), 1) + out.scores.shape[1:]), local, arrs.rows[sel], arrs.cols[sel])
            l_bce = bce_loss(ops.reshape(picked, (len(sel),)), arrs.labels[sel])
            if targets is not None:
                feats = out.pixel_features(local, arrs.rows[sel], arrs.cols[sel])
                l_mimic = mimic_loss(out.project(feats), targets[sel])
            else:
                l_mimic = Tensor(0.0)
            loss = total_loss(l_bce, l_mimic, lam)
            backward(loss)
            opt.step()
            opt.zero_grad()
            sums += (l_bce.item(), l_mimic.item(), loss.item())
            scores[sel] = picked.data.reshape(-1)
        if epoch_log is not None:
            epoch_log.add(EpochStats(epoch, opt.lr, *sums, balanced_accuracy(scores, arrs.labels)))
        if on_epoch is not None:
            on_epoch(epoch, model)
    return model
