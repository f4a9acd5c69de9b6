"""Architecture and training configuration, plus the two named profiles."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    """Residual encoder layout.

    Without a stem, stage ``l`` (1-based) runs at ``H / 2**l`` with
    ``base_channels * 2**(l-1)`` channels.  ``stem=True`` prepends a
    ResNet-style 7×7 stride-2 conv and 2×2 max pool, which shifts every stage
    one octave coarser.
    """

    stages: int = 4
    base_channels: int = 16
    input_channels: int = 4
    blocks_per_stage: int = 1
    stem: bool = False

    def stage_channels(self, l: int) -> int:
        return self.base_channels * 2 ** (l - 1)

    def stage_factor(self, l: int) -> int:
        return 2 ** (l + 1) if self.stem else 2**l

    @property
    def out_channels(self) -> int:
        return self.stage_channels(self.stages)


@dataclass(frozen=True)
class ModelConfig:
    size: int = 64
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    d: int = 16
    d_hat: int = 128
    k: int = 3
    decoder_convs: int = 1
    decoder_width_mult: int = 1
    fusion_mode: str = "dynamic"
    n_scales: int = 2
    onehot_bins: int = 0

    def __post_init__(self):
        if self.fusion_mode not in ("dynamic", "concat"):
            raise ConfigError(f"fusion_mode must be 'dynamic' or 'concat', got {self.fusion_mode!r}")
        if self.n_scales not in (1, 2):
            raise ConfigError(f"n_scales must be 1 or 2, got {self.n_scales}")
        if self.k % 2 == 0:
            raise ConfigError(f"dynamic kernel size must be odd, got {self.k}")
        if self.decoder_convs < 1 or self.decoder_width_mult < 1:
            raise ConfigError("decoder_convs and decoder_width_mult must be >= 1")
        if self.onehot_bins == 1 or self.onehot_bins < 0:
            raise ConfigError(f"onehot_bins must be 0 or >= 2, got {self.onehot_bins}")
        if self.d_hat != self.encoder.out_channels:
            raise ConfigError(
                f"d_hat ({self.d_hat}) must equal the deepest encoder width ({self.encoder.out_channels})"
            )
        if self.size % self.encoder.stage_factor(self.encoder.stages):
            raise ConfigError(f"input size {self.size} not divisible by the encoder's total stride")

    def with_(self, **changes) -> "ModelConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["encoder"] = EncoderConfig(**d["encoder"])
        return cls(**d)


DESK = ModelConfig()

# Full-size geometry used only for analytic FLOP counts: 256×256 input,
# ResNet18-like encoder (stem + 2 basic blocks per stage), d=64, d̂=512.
# Decoder depth and width are unpublished; two convs per level at 4× the
# skip width put the dense pass at roughly the published cost.
FULL = ModelConfig(
    size=256,
    encoder=EncoderConfig(stages=4, base_channels=64, blocks_per_stage=2, stem=True),
    d=64,
    d_hat=512,
    decoder_convs=2,
    decoder_width_mult=4,
)

PROFILES = {"desk": DESK, "full": FULL}


@dataclass
class TrainConfig:
    epochs: int = 20
    lr: float = 0.0005
    lr_halving_period_epochs: int = 2
    lambda_mimic: float = 16.0
    batch_size: int = 4
    seed: int = 0
    freeze_encoder: bool = True
    mimic_enabled: bool = True
    fusion_mode: str = "dynamic"
    n_scales: int = 2
    onehot_bins: int = 0
    transfer: bool = True

    def __post_init__(self):
        if self.lambda_mimic < 0:
            raise ConfigError("lambda_mimic must be nonnegative")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.epochs < 0 or self.batch_size < 1 or self.lr_halving_period_epochs < 1:
            raise ConfigError("epochs, batch_size and lr_halving_period_epochs must be positive")

    @property
    def effective_lambda(self) -> float:
        return self.lambda_mimic if self.mimic_enabled else 0.0

    def lr_at(self, epoch: int) -> float:
        """Learning rate for 1-based ``epoch``: halved every period."""
        return self.lr / 2 ** ((epoch - 1) // self.lr_halving_period_epochs)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def model_config_for(train: TrainConfig, base: Optional[ModelConfig] = None) -> ModelConfig:
    base = base or DESK
    return base.with_(fusion_mode=train.fusion_mode, n_scales=train.n_scales, onehot_bins=train.onehot_bins)
