"""Differentiable operations on :class:`Tensor`.

Every op returns a new tensor; when gradients are being recorded the result
carries a closure mapping its output gradient back onto its inputs.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .tensor import ContractError, DimensionError, Tensor, as_tensor, make_result

# Optional instrumentation: callables receiving (kind, info-dict) per executed
# layer-level op.  The FLOP tracer in evaluation.flops installs itself here.
_hooks: list = []


def _emit(kind: str, **info) -> None:
    for hook in _hooks:
        hook(kind, info)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    out = a.data + b.data
    _emit("add", elements=out.size)

    def vjp(g):
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    return make_result(out, "add", (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape

    def vjp(g):
        return _unbroadcast(g, sa), _unbroadcast(-g, sb)

    return make_result(a.data - b.data, "sub", (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data

    def vjp(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return make_result(ad * bd, "mul", (a, b), vjp)


def scalar_mul(x: Tensor, c: float) -> Tensor:
    c = float(c)
    return make_result(x.data * c, "scalar_mul", (x,), lambda g: (g * c,))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    _emit("relu", elements=x.size)
    return make_result(np.where(mask, x.data, 0.0), "relu", (x,), lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    z = x.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    _emit("sigmoid", elements=x.size)
    return make_result(out, "sigmoid", (x,), lambda g: (g * out * (1.0 - out),))


def log(x: Tensor) -> Tensor:
    xd = x.data
    if np.any(xd <= 0):
        raise ContractError("log() of a non-positive value")
    return make_result(np.log(xd), "log", (x,), lambda g: (g / xd,))


def clip_min(x: Tensor, floor: float) -> Tensor:
    """``max(x, floor)``; gradient passes only where the input was kept."""
    keep = x.data >= floor
    return make_result(np.where(keep, x.data, floor), "clip_min", (x,), lambda g: (g * keep,))


def square(x: Tensor) -> Tensor:
    xd = x.data
    return make_result(xd * xd, "square", (x,), lambda g: (2.0 * g * xd,))


# ---------------------------------------------------------------------------
# reductions and shape
# ---------------------------------------------------------------------------


def sum(x: Tensor, axis=None) -> Tensor:  # noqa: A001 - mirrors numpy naming
    shape = x.shape
    out = x.data.sum(axis=axis)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a % len(shape) for a in axes)
        return (np.broadcast_to(np.expand_dims(g, axes), shape).copy(),)

    return make_result(out, "sum", (x,), vjp)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    old = x.shape
    return make_result(x.data.reshape(shape), "reshape", (x,), lambda g: (g.reshape(old),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out = np.ascontiguousarray(x.data.transpose(axes))
    return make_result(out, "transpose", (x,), lambda g: (g.transpose(inv),))


def concat_channels(xs: Sequence[Tensor]) -> Tensor:
    """Concatenate N×C_i×H×W tensors along the channel axis."""
    xs = [as_tensor(x) for x in xs]
    ref = xs[0].shape
    for i, x in enumerate(xs[1:], start=1):
        if x.ndim != 4:
            raise DimensionError(f"concat_channels input {i}: expected 4 dims, got {x.ndim}")
        for axis, label in ((0, "batch"), (2, "height"), (3, "width")):
            if x.shape[axis] != ref[axis]:
                raise DimensionError(
                    f"concat_channels: {label} axis mismatch ({ref[axis]} vs {x.shape[axis]}) at input {i}"
                )
    splits = np.cumsum([x.shape[1] for x in xs])[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=1))

    return make_result(np.concatenate([x.data for x in xs], axis=1), "concat_channels", xs, vjp)


def concat_columns(xs: Sequence[Tensor]) -> Tensor:
    """Concatenate N×F_i tensors along the feature axis."""
    xs = [as_tensor(x) for x in xs]
    for i, x in enumerate(xs):
        if x.ndim != 2 or x.shape[0] != xs[0].shape[0]:
            raise DimensionError(f"concat_columns: input {i} has shape {x.shape}, batch axis must match")
    splits = np.cumsum([x.shape[1] for x in xs])[:-1]
    return make_result(
        np.concatenate([x.data for x in xs], axis=1), "concat_columns", xs, lambda g: tuple(np.split(g, splits, axis=1))
    )


def stack_rows(xs: Sequence[Tensor]) -> Tensor:
    """Stack 1-D tensors into a 2-D one."""
    xs = [as_tensor(x) for x in xs]
    return make_result(
        np.stack([x.data for x in xs]), "stack_rows", xs, lambda g: tuple(g[i] for i in range(len(xs)))
    )


def gather_pixels(x: Tensor, n: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    """Pick ``x[n_i, :, rows_i, cols_i]`` for each i, giving an M×C tensor."""
    n = np.asarray(n, dtype=np.intp)
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    shape = x.shape
    out = x.data[n, :, rows, cols]

    def vjp(g):
        full = np.zeros(shape)
        np.add.at(full, (n, slice(None), rows, cols), g)
        return (full,)

    return make_result(out, "gather_pixels", (x,), vjp)


def spatial_broadcast(v: Tensor, h: int, w: int) -> Tensor:
    """N×C vector → N×C×h×w map with the vector copied to every pixel."""
    if v.ndim != 2:
        raise DimensionError(f"spatial_broadcast: expected N×C input, got shape {v.shape}")
    n, c = v.shape
    out = np.broadcast_to(v.data[:, :, None, None], (n, c, h, w)).copy()
    return make_result(out, "spatial_broadcast", (v,), lambda g: (g.sum(axis=(2, 3)),))


def global_avg_pool(x: Tensor) -> Tensor:
    """N×C×H×W → N×C mean over the spatial axes."""
    if x.ndim != 4:
        raise DimensionError(f"global_avg_pool: expected 4 dims, got {x.ndim}")
    shape = x.shape
    hw = shape[2] * shape[3]
    _emit("global_avg_pool", elements=x.size)

    def vjp(g):
        return (np.broadcast_to(g[:, :, None, None] / hw, shape).copy(),)

    return make_result(x.data.mean(axis=(2, 3)), "global_avg_pool", (x,), vjp)


def upsample_nearest_2x(x: Tensor) -> Tensor:
    """Replicate each pixel into a 2×2 block."""
    n, c, h, w = x.shape
    out = np.broadcast_to(x.data[:, :, :, None, :, None], (n, c, h, 2, w, 2)).reshape(n, c, 2 * h, 2 * w)
    _emit("upsample", elements=out.size)

    def vjp(g):
        return (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),)

    return make_result(out, "upsample_nearest_2x", (x,), vjp)


def max_pool_2x(x: Tensor) -> Tensor:
    """2×2 max pooling, stride 2.  Ties send the gradient to the first maximum."""
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"max_pool_2x: height/width must be even, got {h}×{w}")
    blocks = x.data.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]
    _emit("max_pool", elements=x.size)

    def vjp(g):
        gb = np.zeros((n, c, h // 2, w // 2, 4))
        np.put_along_axis(gb, arg[..., None], g[..., None], axis=-1)
        return (gb.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w),)

    return make_result(out, "max_pool_2x", (x,), vjp)


# ---------------------------------------------------------------------------
# dense layers
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    if ad.ndim != 2 or bd.ndim != 2:
        raise DimensionError("matmul expects 2-D operands")
    if ad.shape[1] != bd.shape[0]:
        raise DimensionError(f"matmul: inner axis mismatch ({ad.shape[1]} vs {bd.shape[0]})")

    def vjp(g):
        return g @ bd.T, ad.T @ g

    return make_result(ad @ bd, "matmul", (a, b), vjp)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """``x @ weight.T + bias`` for an N×F input and G×F weight."""
    xd, wd = x.data, weight.data
    if xd.ndim != 2:
        raise DimensionError(f"linear: input must be N×F, got shape {xd.shape}")
    if wd.ndim != 2 or xd.shape[1] != wd.shape[1]:
        raise DimensionError(f"linear: feature axis mismatch (input {xd.shape[1]} vs weight {wd.shape[-1]})")
    if bias is not None and bias.shape != (wd.shape[0],):
        raise DimensionError(f"linear: bias length {bias.shape} does not match {wd.shape[0]} outputs")
    out = xd @ wd.T
    if bias is not None:
        out = out + bias.data
    _emit("linear", batch=xd.shape[0], in_features=wd.shape[1], out_features=wd.shape[0], bias=bias is not None)

    def vjp(g):
        grads = [g @ wd, g.T @ xd]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return grads

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return make_result(out, "linear", inputs, vjp)


def channel_affine(x: Tensor, scale: Tensor, shift: Tensor) -> Tensor:
    """Per-channel ``x * scale + shift`` on an N×C×H×W tensor."""
    c = x.shape[1]
    if scale.shape != (c,) or shift.shape != (c,):
        raise DimensionError(f"channel_affine: channel axis mismatch (input {c}, scale {scale.shape}, shift {shift.shape})")
    xd, sd = x.data, scale.data
    _emit("affine", elements=x.size)

    def vjp(g):
        return g * sd[None, :, None, None], (g * xd).sum(axis=(0, 2, 3)), g.sum(axis=(0, 2, 3))

    out = xd * sd[None, :, None, None] + shift.data[None, :, None, None]
    return make_result(out, "channel_affine", (x, scale, shift), vjp)


# ---------------------------------------------------------------------------
# convolutions
# ---------------------------------------------------------------------------


def _check_4d(name: str, t: Tensor, what: str) -> None:
    if t.ndim != 4:
        raise DimensionError(f"{name}: {what} must have 4 dims, got shape {t.shape}")


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1, padding: int = 0) -> Tensor:
    """Zero-padded 2-D cross-correlation.

    Parameters
    ----------
    x : Tensor
        N×C_in×H×W input.
    weight : Tensor
        C_out×C_in×k×k kernel, k odd.
    bias : Tensor, optional
        C_out vector.
    stride, padding : int
        Output size is ``(H + 2*padding - k) // stride + 1`` per spatial axis.
    """
    _check_4d("conv2d", x, "input")
    _check_4d("conv2d", weight, "weight")
    n, cin, h, w = x.shape
    cout, wcin, kh, kw = weight.shape
    if wcin != cin:
        raise DimensionError(f"conv2d: input-channel axis mismatch (input {cin} vs weight {wcin})")
    if kh != kw or kh % 2 == 0:
        raise DimensionError(f"conv2d: kernel axes must be equal and odd, got {kh}×{kw}")
    if bias is not None and bias.shape != (cout,):
        raise DimensionError(f"conv2d: bias length {bias.shape} does not match output-channel axis {cout}")
    if stride < 1 or padding < 0:
        raise ContractError("conv2d: stride must be positive and padding nonnegative")
    k = kh
    if h + 2 * padding < k:
        raise DimensionError(f"conv2d: height axis {h} + 2·{padding} smaller than kernel {k}")
    if w + 2 * padding < k:
        raise DimensionError(f"conv2d: width axis {w} + 2·{padding} smaller than kernel {k}")
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    wmat = weight.data.reshape(cout, cin * k * k)
    # per-sample column matrices, (N, C_in·k·k, H'·W'), channel-major like the weight
    cols = np.empty((n, cin, k, k, ho, wo))
    for di in range(k):
        for dj in range(k):
            cols[:, :, di, dj] = xp[:, :, di : di + stride * ho : stride, dj : dj + stride * wo : stride]
    cols = cols.reshape(n, cin * k * k, ho * wo)
    out = np.matmul(wmat, cols)
    if bias is not None:
        out += bias.data[:, None]
    out = out.reshape(n, cout, ho, wo)
    _emit("conv", batch=n, out_h=ho, out_w=wo, cin=cin, cout=cout, k=k, bias=bias is not None)

    def vjp(g):
        g3 = g.reshape(n, cout, ho * wo)
        gw = np.matmul(g3, cols.transpose(0, 2, 1)).sum(axis=0).reshape(weight.shape)
        gx = None
        if x.requires_grad:
            gcols = np.matmul(wmat.T, g3).reshape(n, cin, k, k, ho, wo)
            gxp = np.zeros(xp.shape)
            for di in range(k):
                for dj in range(k):
                    gxp[:, :, di : di + stride * ho : stride, dj : dj + stride * wo : stride] += gcols[:, :, di, dj]
            gx = gxp[:, :, padding : padding + h, padding : padding + w] if padding else gxp
        grads = [gx, gw]
        if bias is not None:
            grads.append(g3.sum(axis=(0, 2)))
        return grads

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return make_result(out, "conv2d", inputs, vjp)


def dynamic_depthwise_conv2d(x: Tensor, kernels: Tensor) -> Tensor:
    """Per-sample depthwise cross-correlation with runtime kernels.

    ``kernels[n, c]`` is the k×k filter applied to channel ``c`` of sample
    ``n``; the same filter is shared across all spatial positions.  Stride 1,
    zero padding ``k // 2``, so the output keeps the input resolution.
    """
    _check_4d("dynamic_depthwise_conv2d", x, "input")
    _check_4d("dynamic_depthwise_conv2d", kernels, "kernels")
    n, c, h, w = x.shape
    kn, kc, kh, kw = kernels.shape
    if kn != n:
        raise DimensionError(f"dynamic_depthwise_conv2d: batch axis mismatch (input {n} vs kernels {kn})")
    if kc != c:
        raise DimensionError(f"dynamic_depthwise_conv2d: channel axis mismatch (input {c} vs kernels {kc})")
    if kh != kw or kh % 2 == 0:
        raise DimensionError(f"dynamic_depthwise_conv2d: kernel axes must be equal and odd, got {kh}×{kw}")
    k = kh
    p = k // 2
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p)))
    kd = kernels.data
    out = np.zeros((n, c, h, w))
    for di in range(k):
        for dj in range(k):
            out += kd[:, :, di, dj, None, None] * xp[:, :, di : di + h, dj : dj + w]
    _emit("dynamic_depthwise", batch=n, h=h, w=w, channels=c, k=k)

    def vjp(g):
        gk = np.empty(kd.shape)
        gxp = np.zeros(xp.shape) if x.requires_grad else None
        for di in range(k):
            for dj in range(k):
                patch = xp[:, :, di : di + h, dj : dj + w]
                gk[:, :, di, dj] = np.einsum("nchw,nchw->nc", g, patch)
                if gxp is not None:
                    gxp[:, :, di : di + h, dj : dj + w] += kd[:, :, di, dj, None, None] * g
        gx = gxp[:, :, p : p + h, p : p + w] if gxp is not None else None
        return gx, gk

    return make_result(out, "dynamic_depthwise_conv2d", (x, kernels), vjp)
