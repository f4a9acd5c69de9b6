"""Parameter containers and the handful of layers the assessors are built from."""

from __future__ import annotations

import hashlib
from typing import Iterator, Optional

import numpy as np

from ..autodiff import Tensor, ops


class TransferError(ValueError):
    """Raised when parameters cannot be copied between mismatched modules."""


class Module:
    """Base class: parameters are discovered from attributes in definition order."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, value in vars(self).items():
            if key.startswith("_"):
                continue
            name = f"{prefix}{key}"
            if isinstance(value, Tensor):
                if value.requires_grad:
                    yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        problems = _diff_states({k: v.shape for k, v in own.items()}, {k: np.shape(v) for k, v in state.items()})
        if problems:
            raise TransferError("state mismatch: " + "; ".join(problems))
        for name, p in own.items():
            p.data = np.ascontiguousarray(np.asarray(state[name], dtype=np.float64)).copy()

    def checksum(self) -> str:
        h = hashlib.sha256()
        for name, p in self.named_parameters():
            h.update(name.encode())
            h.update(p.data.tobytes())
        return h.hexdigest()

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def _diff_states(a: dict, b: dict) -> list[str]:
    problems = []
    for name in sorted(set(a) | set(b)):
        if name not in b:
            problems.append(f"{name}: missing in source")
        elif name not in a:
            problems.append(f"{name}: unexpected in source")
        elif tuple(a[name]) != tuple(b[name]):
            problems.append(f"{name}: shape {tuple(b[name])} != {tuple(a[name])}")
    return problems


def he_normal(rng: np.random.Generator, shape: tuple, fan_in: int) -> Tensor:
    return Tensor(rng.standard_normal(shape) * np.sqrt(2.0 / fan_in), requires_grad=True)


class Conv2d(Module):
    def __init__(self, cin: int, cout: int, k: int, rng: np.random.Generator, stride: int = 1, bias: bool = True):
        self.weight = he_normal(rng, (cout, cin, k, k), cin * k * k)
        self.bias = Tensor(np.zeros(cout), requires_grad=True) if bias else None
        self.stride = stride
        self.padding = k // 2

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class ChannelAffine(Module):
    """Learnable per-channel scale and shift; stands in for batch normalization."""

    def __init__(self, channels: int):
        self.scale = Tensor(np.ones(channels), requires_grad=True)
        self.shift = Tensor(np.zeros(channels), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return ops.channel_affine(x, self.scale, self.shift)


class Linear(Module):
    def __init__(self, fin: int, fout: int, rng: np.random.Generator, bias: bool = True, scale: Optional[float] = None):
        std = np.sqrt(2.0 / fin) if scale is None else scale
        self.weight = Tensor(rng.standard_normal((fout, fin)) * std, requires_grad=True)
        self.bias = Tensor(np.zeros(fout), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class ConvUnit(Module):
    """conv → per-channel affine → optional relu."""

    def __init__(self, cin: int, cout: int, k: int, rng: np.random.Generator, stride: int = 1, act: bool = True):
        self.conv = Conv2d(cin, cout, k, rng, stride=stride, bias=False)
        self.norm = ChannelAffine(cout)
        self.act = act

    def forward(self, x: Tensor) -> Tensor:
        y = self.norm(self.conv(x))
        return ops.relu(y) if self.act else y


class ResidualBlock(Module):
    """Basic two-conv residual block with identity shortcut."""

    def __init__(self, channels: int, rng: np.random.Generator):
        self.a = ConvUnit(channels, channels, 3, rng)
        self.b = ConvUnit(channels, channels, 3, rng, act=False)
        # start near identity so deep stacks train from scratch without normalization
        self.b.norm.scale.data[:] = 0.0

    def forward(self, x: Tensor) -> Tensor:
        return ops.relu(ops.add(self.b(self.a(x)), x))
