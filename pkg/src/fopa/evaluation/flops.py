"""Analytic FLOP counts and a runtime tracer that checks them.

Convention: multiplies and adds count separately, so a k×k conv output
element costs ``2·(C_in·k² + 1)``; the +1 covers the bias add and is charged
whether or not the layer has a bias.  Pooling and activations cost one FLOP
per element, the per-channel affine two.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator

from ..autodiff import ops
from ..config import ModelConfig
from ..models.backbone import decoder_plan

CONVENTION = "FLOPs count multiplies and adds separately (one multiply-add = 2 FLOPs)"


class CountingError(ValueError):
    pass


def layer_flops(kind: str, info: dict) -> int:
    if kind == "conv":
        return 2 * info["batch"] * info["out_h"] * info["out_w"] * info["cout"] * (info["cin"] * info["k"] ** 2 + 1)
    if kind == "dynamic_depthwise":
        return 2 * info["batch"] * info["h"] * info["w"] * info["channels"] * info["k"] ** 2
    if kind == "linear":
        return 2 * info["batch"] * info["in_features"] * info["out_features"]
    if kind == "affine":
        return 2 * info["elements"]
    if kind in ("relu", "sigmoid", "add", "global_avg_pool", "max_pool", "upsample"):
        return info["elements"]
    raise CountingError(f"no FLOP rule for layer kind {kind!r}")


# ---------------------------------------------------------------------------
# layer inventories mirroring the forward passes (batch of one)
# ---------------------------------------------------------------------------


def _conv_unit(ev, h, cin, cout, k, stride=1, act=True):
    ho = (h + 2 * (k // 2) - k) // stride + 1
    ev.append(("conv", dict(batch=1, out_h=ho, out_w=ho, cin=cin, cout=cout, k=k, bias=False)))
    ev.append(("affine", dict(elements=cout * ho * ho)))
    if act:
        ev.append(("relu", dict(elements=cout * ho * ho)))
    return ho


def _encoder(ev: list, cfg: ModelConfig) -> dict[int, tuple[int, int]]:
    """Append encoder events; return factor → (channels, side)."""
    e = cfg.encoder
    h, cin = cfg.size, e.input_channels
    out = {}
    if e.stem:
        h = _conv_unit(ev, h, cin, e.base_channels, 7, stride=2)
        out[2] = (e.base_channels, h)
        ev.append(("max_pool", dict(elements=e.base_channels * h * h)))
        h //= 2
        cin = e.base_channels
    for l in range(1, e.stages + 1):
        cout = e.stage_channels(l)
        stride = 1 if (e.stem and l == 1) else 2
        h = _conv_unit(ev, h, cin, cout, 3, stride=stride)
        for _ in range(e.blocks_per_stage):
            _conv_unit(ev, h, cout, cout, 3)
            _conv_unit(ev, h, cout, cout, 3, act=False)
            ev.append(("add", dict(elements=cout * h * h)))
            ev.append(("relu", dict(elements=cout * h * h)))
        out[e.stage_factor(l)] = (cout, h)
        cin = cout
    return out


def sopa_events(cfg: ModelConfig) -> list[tuple[str, dict]]:
    ev: list = []
    feats = _encoder(ev, cfg)
    c, h = feats[max(feats)]
    ev.append(("global_avg_pool", dict(elements=c * h * h)))
    ev.append(("linear", dict(batch=1, in_features=cfg.d_hat, out_features=1, bias=True)))
    ev.append(("sigmoid", dict(elements=1)))
    return ev


def fopa_events(cfg: ModelConfig) -> list[tuple[str, dict]]:
    e = cfg.encoder
    ev: list = []
    fg = _encoder(ev, cfg)
    fg_dims = []
    for s in range(cfg.n_scales):
        c, h = fg[e.stage_factor(e.stages - s)]
        ev.append(("global_avg_pool", dict(elements=c * h * h)))
        fg_dims.append(c + cfg.onehot_bins)
    bg = _encoder(ev, cfg)
    c, h = bg[max(bg)]
    for f, cin, cout in decoder_plan(cfg):
        h *= 2
        ev.append(("upsample", dict(elements=c * h * h)))
        for i in range(cfg.decoder_convs):
            _conv_unit(ev, h, cin if i == 0 else cout, cout, 3)
        c = cout
    H, d, k = cfg.size, cfg.d, cfg.k
    if cfg.fusion_mode == "dynamic":
        hidden = 2 * k * k * d
        for dim in fg_dims:
            ev.append(("linear", dict(batch=1, in_features=dim, out_features=hidden, bias=True)))
            ev.append(("relu", dict(elements=hidden)))
            ev.append(("linear", dict(batch=1, in_features=hidden, out_features=k * k * d, bias=True)))
        ev.append(("dynamic_depthwise", dict(batch=1, h=H, w=H, channels=d, k=k)))
        if cfg.n_scales == 2:
            ev.append(("dynamic_depthwise", dict(batch=1, h=H // 2, w=H // 2, channels=d, k=k)))
            ev.append(("upsample", dict(elements=d * H * H)))
            ev.append(("add", dict(elements=d * H * H)))
    else:
        ev.append(("conv", dict(batch=1, out_h=H, out_w=H, cin=fg_dims[0] + d, cout=d, k=1, bias=True)))
        if cfg.n_scales == 2:
            ev.append(("conv", dict(batch=1, out_h=H // 2, out_w=H // 2, cin=fg_dims[1] + d, cout=d, k=1, bias=True)))
            ev.append(("upsample", dict(elements=d * H * H)))
            ev.append(("add", dict(elements=d * H * H)))
    ev.append(("conv", dict(batch=1, out_h=H, out_w=H, cin=d, cout=1, k=1, bias=True)))
    ev.append(("sigmoid", dict(elements=H * H)))
    return ev


@dataclass(frozen=True)
class FlopCount:
    per_pass: int
    per_map: int
    passes_per_map: int


def count_flops(cfg: ModelConfig, model: str) -> FlopCount:
    """FLOPs per forward pass and per full H×W score map.

    ``model`` is ``"sopa"`` (enumeration: one pass per grid location) or
    ``"fopa"`` (dense: one pass per map).
    """
    if model == "sopa":
        per = sum(layer_flops(k, i) for k, i in sopa_events(cfg))
        n = cfg.size * cfg.size
    elif model == "fopa":
        per = sum(layer_flops(k, i) for k, i in fopa_events(cfg))
        n = 1
    else:
        raise CountingError(f"unknown model {model!r}; expected 'sopa' or 'fopa'")
    return FlopCount(per, per * n, n)


def enumeration_to_dense_ratio(cfg: ModelConfig) -> float:
    return count_flops(cfg, "sopa").per_map / count_flops(cfg, "fopa").per_map


# ---------------------------------------------------------------------------
# runtime tracing
# ---------------------------------------------------------------------------


class FlopTracer:
    def __init__(self):
        self.events: list[tuple[str, dict]] = []

    def __call__(self, kind: str, info: dict) -> None:
        self.events.append((kind, dict(info)))

    @property
    def flops(self) -> int:
        return sum(layer_flops(k, i) for k, i in self.events)


@contextmanager
def trace_flops() -> Iterator[FlopTracer]:
    """Record every layer-level op executed inside the block."""
    tracer = FlopTracer()
    ops._hooks.append(tracer)
    try:
        yield tracer
    finally:
        ops._hooks.remove(tracer)
