"""The slow per-composite classifier (SOPA) and the dense fast assessor (FOPA)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..autodiff import Tensor, no_grad, ops
from ..config import ConfigError, ModelConfig
from .backbone import Decoder, Encoder, stage_features
from .fusion import ConcatFusion, KernelGenerator, fuse_concat, fuse_dynamic
from .layers import Conv2d, Linear, Module, TransferError, _diff_states


class SopaModel(Module):
    """Encoder → global average pool (the d̂-dim penultimate feature) → linear logit."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.encoder = Encoder(cfg.encoder, rng)
        self.head = Linear(cfg.d_hat, 1, rng, scale=np.sqrt(1.0 / cfg.d_hat))
        self._passes = 0

    @property
    def passes(self) -> int:
        return self._passes

    def reset_passes(self) -> None:
        self._passes = 0

    def forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """Return (logits N, penultimate N×d̂) for an N×4×H×W composite batch."""
        if x.ndim != 4 or x.shape[1] != self.cfg.encoder.input_channels:
            raise ConfigError(
                f"SOPA expects N×{self.cfg.encoder.input_channels}×H×W input (RGB + mask), got shape {x.shape}"
            )
        self._passes += x.shape[0]
        feats = self.encoder(x)
        pooled = ops.global_avg_pool(feats[max(feats)])
        logits = ops.reshape(self.head(pooled), (x.shape[0],))
        return logits, pooled


@dataclass
class FopaOutput:
    scores: Tensor  # N×H×W in (0, 1)
    logits: Tensor  # N×H×W
    features: Tensor  # N×d×H×W, the fused map f_o^{1,2}
    model: "FopaModel"

    def project(self, pixel_features: Tensor) -> Tensor:
        """Map M×d pixel features to the M×d̂ mimic space."""
        return self.model.mimic_proj(pixel_features)

    def pixel_features(self, n, rows, cols) -> Tensor:
        return ops.gather_pixels(self.features, n, rows, cols)


class FopaModel(Module):
    """Foreground encoder, background U-Net, per-scale fusion, and pixel heads."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.fg_encoder = Encoder(cfg.encoder, rng)
        self.bg_encoder = Encoder(cfg.encoder, rng)
        self.bg_decoder = Decoder(cfg, rng)
        L = cfg.encoder.stages
        fg_dims = [cfg.encoder.stage_channels(L - s) + cfg.onehot_bins for s in range(cfg.n_scales)]
        if cfg.fusion_mode == "dynamic":
            self.kgus = [KernelGenerator(dim, cfg.k, cfg.d, rng) for dim in fg_dims]
            self.concat_units = []
        else:
            self.kgus = []
            self.concat_units = [ConcatFusion(dim, cfg.d, rng) for dim in fg_dims]
        self.classifier = Conv2d(cfg.d, 1, 1, rng)
        self.mimic_proj = Linear(cfg.d, cfg.d_hat, rng)
        self.frozen_bg_encoder = False
        self._passes = 0

    @property
    def passes(self) -> int:
        return self._passes

    def reset_passes(self) -> None:
        self._passes = 0

    def trainable_parameters(self) -> list[Tensor]:
        frozen = {id(p) for p in self.bg_encoder.parameters()} if self.frozen_bg_encoder else set()
        return [p for p in self.parameters() if id(p) not in frozen]

    def fg_vectors(self, fg: Tensor, onehot: Optional[np.ndarray]) -> list[Tensor]:
        feats = stage_features(self.fg_encoder(fg), self.cfg.encoder)
        vecs = []
        for s in range(self.cfg.n_scales):
            v = ops.global_avg_pool(feats[-1 - s])
            if self.cfg.onehot_bins:
                v = ops.concat_columns([v, Tensor(onehot)])
            vecs.append(v)
        return vecs

    def decoder_maps(self, bg: Tensor) -> tuple[Tensor, Tensor]:
        if self.frozen_bg_encoder:
            with no_grad():
                feats = self.bg_encoder(bg)
        else:
            feats = self.bg_encoder(bg)
        return self.bg_decoder(feats)

    def forward(self, fg: Tensor, bg: Tensor, onehot: Optional[np.ndarray] = None) -> FopaOutput:
        """One pass over an N-batch: fg is O′+M′ (N×4×H×W), bg is B + zero mask."""
        if bool(self.cfg.onehot_bins) != (onehot is not None):
            raise ConfigError(
                "input variant does not match model: "
                + ("one-hot model needs a scale one-hot" if self.cfg.onehot_bins else "centered-canvas model got a one-hot")
            )
        if onehot is not None and onehot.shape != (fg.shape[0], self.cfg.onehot_bins):
            raise ConfigError(f"scale one-hot must be N×{self.cfg.onehot_bins}, got {onehot.shape}")
        n, _, h, w = fg.shape
        if (h, w) != (self.cfg.size, self.cfg.size) or bg.shape != fg.shape:
            raise ConfigError(f"inputs must both be N×4×{self.cfg.size}×{self.cfg.size}")
        self._passes += 1
        vecs = self.fg_vectors(fg, onehot)
        maps = self.decoder_maps(bg)
        if self.cfg.fusion_mode == "dynamic":
            kernels = [kgu(v) for kgu, v in zip(self.kgus, vecs)]
            fused = fuse_dynamic(maps, kernels, self.cfg.n_scales)
        else:
            fused = fuse_concat(maps, vecs, self.concat_units, self.cfg.n_scales)
        logits = ops.reshape(self.classifier(fused), (n, h, w))
        return FopaOutput(scores=ops.sigmoid(logits), logits=logits, features=fused, model=self)

    def pixel_head(self, feature: np.ndarray) -> float:
        """Score of one d-dim pixel feature through the classifier, in isolation."""
        z = float(self.classifier.weight.data.reshape(-1) @ feature + self.classifier.bias.data[0])
        return float(1.0 / (1.0 + np.exp(-z)))


def transfer_background_prior(sopa: SopaModel, fopa: FopaModel, freeze: bool = True) -> FopaModel:
    """Copy the trained SOPA encoder into FOPA's background encoder, optionally freezing it."""
    src = dict(sopa.encoder.named_parameters())
    dst = dict(fopa.bg_encoder.named_parameters())
    problems = _diff_states({k: v.shape for k, v in dst.items()}, {k: v.shape for k, v in src.items()})
    if problems:
        raise TransferError("encoder architectures differ: " + "; ".join(problems))
    for name, p in dst.items():
        p.data = src[name].data.copy()
    fopa.frozen_bg_encoder = bool(freeze)
    return fopa
