"""Kernel generation and the two ways of merging foreground into background maps."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..autodiff import DimensionError, Tensor, ops
from .layers import Conv2d, Linear, Module


class KernelGenerator(Module):
    """Two fully connected layers mapping a pooled foreground vector to k×k×d filters.

    The hidden layer is ``2·k·k·d`` wide with a relu; the output layer starts
    with zero bias.
    """

    def __init__(self, in_dim: int, k: int, d: int, rng: np.random.Generator):
        self.in_dim = in_dim
        self.k = k
        self.d = d
        hidden = 2 * k * k * d
        self.fc1 = Linear(in_dim, hidden, rng)
        # small output weights keep the initial filters near zero
        self.fc2 = Linear(hidden, k * k * d, rng, scale=np.sqrt(1.0 / hidden) / k)

    def forward(self, v: Tensor) -> Tensor:
        if v.ndim != 2 or v.shape[1] != self.in_dim:
            raise DimensionError(f"KGU expects N×{self.in_dim} input, got shape {v.shape}")
        flat = self.fc2(ops.relu(self.fc1(v)))
        return ops.reshape(flat, (v.shape[0], self.d, self.k, self.k))


def fuse_dynamic(
    decoder_maps: Sequence[Tensor],
    kernels: Sequence[Tensor],
    n_scales: int,
) -> Tensor:
    """Depthwise-filter the decoder maps with foreground-conditioned kernels.

    ``decoder_maps`` is (F_b^1, F_b^2) and ``kernels`` is (K^L, K^{L-1}).
    Scale one filters F_b^1 with K^L; with two scales F_b^2 is filtered by
    K^{L-1}, upsampled, and added.
    """
    out = ops.dynamic_depthwise_conv2d(decoder_maps[0], kernels[0])
    if n_scales == 2:
        coarse = ops.dynamic_depthwise_conv2d(decoder_maps[1], kernels[1])
        out = ops.add(out, ops.upsample_nearest_2x(coarse))
    return out


class ConcatFusion(Module):
    """Replicate the foreground vector per pixel, concatenate, then 1×1 conv to ``d``."""

    def __init__(self, fg_dim: int, d: int, rng: np.random.Generator):
        self.fg_dim = fg_dim
        self.conv = Conv2d(fg_dim + d, d, 1, rng)

    def forward(self, bg_map: Tensor, fg_vec: Tensor) -> Tensor:
        n, _, h, w = bg_map.shape
        return self.conv(ops.concat_channels([ops.spatial_broadcast(fg_vec, h, w), bg_map]))


def fuse_concat(
    decoder_maps: Sequence[Tensor],
    fg_vectors: Sequence[Tensor],
    units: Sequence[ConcatFusion],
    n_scales: int,
) -> Tensor:
    out = units[0](decoder_maps[0], fg_vectors[0])
    if n_scales == 2:
        out = ops.add(out, ops.upsample_nearest_2x(units[1](decoder_maps[1], fg_vectors[1])))
    return out
