"""Losses, optimiser, and the two-stage training loops."""

from .losses import bce_loss, mimic_loss, total_loss
from .loops import (
    EpochLog,
    EpochStats,
    NumericError,
    TrainingError,
    balanced_accuracy,
    composite_dataset,
    mimic_targets,
    pair_arrays,
    train_fopa,
    train_sopa,
)
from .optim import Adam

__all__ = [
    "Adam",
    "EpochLog",
    "EpochStats",
    "NumericError",
    "TrainingError",
    "balanced_accuracy",
    "bce_loss",
    "composite_dataset",
    "mimic_loss",
    "mimic_targets",
    "pair_arrays",
    "total_loss",
    "train_fopa",
    "train_sopa",
]
