"""Residual encoder and U-Net style decoder."""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, ops
from ..config import EncoderConfig, ModelConfig
from .layers import Conv2d, ChannelAffine, ConvUnit, Module, ResidualBlock


class Stem(Module):
    def __init__(self, cin: int, cout: int, rng: np.random.Generator):
        self.conv = Conv2d(cin, cout, 7, rng, stride=2, bias=False)
        self.norm = ChannelAffine(cout)

    def forward(self, x: Tensor) -> Tensor:
        return ops.relu(self.norm(self.conv(x)))


class Stage(Module):
    def __init__(self, cin: int, cout: int, stride: int, blocks: int, rng: np.random.Generator):
        self.down = ConvUnit(cin, cout, 3, rng, stride=stride)
        self.blocks = [ResidualBlock(cout, rng) for _ in range(blocks)]

    def forward(self, x: Tensor) -> Tensor:
        x = self.down(x)
        for block in self.blocks:
            x = block(x)
        return x


class Encoder(Module):
    """Returns every stage output, finest first.

    With a stem the stem activation (at H/2) is returned as well, as entry 0,
    so the decoder can use it as a skip connection.
    """

    def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.stem = Stem(cfg.input_channels, cfg.base_channels, rng) if cfg.stem else None
        stages = []
        cin = cfg.base_channels if cfg.stem else cfg.input_channels
        for l in range(1, cfg.stages + 1):
            cout = cfg.stage_channels(l)
            stride = 1 if (cfg.stem and l == 1) else 2
            stages.append(Stage(cin, cout, stride, cfg.blocks_per_stage, rng))
            cin = cout
        self.stages = stages

    def skip_layout(self) -> dict[int, int]:
        """Map of downsampling factor → channel count for every returned feature."""
        layout = {}
        if self.cfg.stem:
            layout[2] = self.cfg.base_channels
        for l in range(1, self.cfg.stages + 1):
            layout[self.cfg.stage_factor(l)] = self.cfg.stage_channels(l)
        return layout

    def forward(self, x: Tensor) -> dict[int, Tensor]:
        feats: dict[int, Tensor] = {}
        if self.stem is not None:
            x = self.stem(x)
            feats[2] = x
            x = ops.max_pool_2x(x)
        for l, stage in enumerate(self.stages, start=1):
            x = stage(x)
            feats[self.cfg.stage_factor(l)] = x
        return feats


def stage_features(feats: dict[int, Tensor], cfg: EncoderConfig) -> list[Tensor]:
    """Stage outputs f^1..f^L in order (drops the stem entry)."""
    return [feats[cfg.stage_factor(l)] for l in range(1, cfg.stages + 1)]


def decoder_plan(cfg: ModelConfig) -> list[tuple[int, int, int]]:
    """(factor, input channels, output channels) for each decoder level, coarse to fine."""
    skips = {}
    if cfg.encoder.stem:
        skips[2] = cfg.encoder.base_channels
    for l in range(1, cfg.encoder.stages + 1):
        skips[cfg.encoder.stage_factor(l)] = cfg.encoder.stage_channels(l)
    deepest = cfg.encoder.stage_factor(cfg.encoder.stages)
    ch = cfg.encoder.out_channels
    plan = []
    f = deepest // 2
    while f >= 1:
        cin = ch + skips.get(f, 0)
        cout = cfg.d if f <= 2 else skips.get(f, max(cfg.d, ch // 2)) * cfg.decoder_width_mult
        plan.append((f, cin, cout))
        ch = cout
        f //= 2
    return plan


class DecoderLevel(Module):
    def __init__(self, cin: int, cout: int, convs: int, rng: np.random.Generator):
        self.units = [ConvUnit(cin if i == 0 else cout, cout, 3, rng) for i in range(convs)]

    def forward(self, x: Tensor) -> Tensor:
        for unit in self.units:
            x = unit(x)
        return x


class Decoder(Module):
    """Nearest 2× upsample, skip concatenation, 3×3 convs; one level per octave.

    Emits the full-resolution map F_b^1 and the half-resolution map F_b^2,
    both with ``d`` channels.
    """

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.plan = decoder_plan(cfg)
        self.levels = [DecoderLevel(cin, cout, cfg.decoder_convs, rng) for _, cin, cout in self.plan]

    def forward(self, feats: dict[int, Tensor]) -> tuple[Tensor, Tensor]:
        x = feats[max(feats)]
        outs = {}
        for (f, _, _), level in zip(self.plan, self.levels):
            x = ops.upsample_nearest_2x(x)
            if f in feats:
                x = ops.concat_channels([x, feats[f]])
            x = level(x)
            outs[f] = x
        return outs[1], outs[2]
