"""SOPA and FOPA assessors."""

from .assessors import FopaModel, FopaOutput, SopaModel, transfer_background_prior
from .checkpoint import CheckpointError, load_model, save_model
from .backbone import Decoder, Encoder, decoder_plan
from .fusion import ConcatFusion, KernelGenerator, fuse_concat, fuse_dynamic
from .layers import Module, TransferError

__all__ = [
    "CheckpointError",
    "ConcatFusion",
    "Decoder",
    "Encoder",
    "FopaModel",
    "FopaOutput",
    "KernelGenerator",
    "Module",
    "SopaModel",
    "TransferError",
    "decoder_plan",
    "fuse_concat",
    "fuse_dynamic",
    "load_model",
    "save_model",
    "transfer_background_prior",
]
