"""Sparse pixel BCE, composite feature mimicking, and their weighted sum."""

from __future__ import annotations

import numpy as np

from ..autodiff import ContractError, DimensionError, Tensor, as_tensor, ops

_TINY = np.finfo(np.float64).tiny


def bce_loss(scores: Tensor, labels) -> Tensor:
    """``-Σ log p_c`` over the annotated pixels, where ``p_c`` is the true-class probability.

    ``scores`` are predicted probabilities of the positive class, one per
    annotated pixel; the sum is not normalised by the pixel count.
    """
    scores = as_tensor(scores)
    y = np.asarray(labels, dtype=np.float64).reshape(scores.shape)
    if scores.size == 0:
        raise ContractError("bce_loss needs at least one annotated pixel")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ContractError("labels must be 0 or 1")
    # p_c = s for positives, 1 - s for negatives
    p_true = ops.add(ops.mul(scores, 2.0 * y - 1.0), 1.0 - y)
    return ops.scalar_mul(ops.sum(ops.log(ops.clip_min(p_true, _TINY))), -1.0)


def mimic_loss(projected: Tensor, targets) -> Tensor:
    """``Σ_i ||projected_i - target_i||²``; targets are constants (no gradient)."""
    target = targets.data if isinstance(targets, Tensor) else np.asarray(targets, dtype=np.float64)
    if projected.shape != target.shape:
        raise DimensionError(f"mimic_loss: feature shapes differ ({projected.shape} vs {target.shape})")
    return ops.sum(ops.square(ops.sub(projected, Tensor(target))))


def total_loss(bce, mimic, lam: float):
    """``bce + lam · mimic`` for tensors or plain floats."""
    if isinstance(bce, Tensor) or isinstance(mimic, Tensor):
        if lam == 0:
            return as_tensor(bce)
        return ops.add(bce, ops.scalar_mul(as_tensor(mimic), lam))
    return bce + lam * mimic
