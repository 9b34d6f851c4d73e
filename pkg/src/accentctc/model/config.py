"""Architecture configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError

FUSION_MODES = ("none", "concat", "weighted_sum")
TRAIN_MODES = ("baseline", "dat", "mtl")


@dataclass
class ModelConfig:
    """Shape of the encoder, its heads, and the embedding fusion point.

    The temporal downsample factor is 2 per conv stage (kernel 3, pool 2 are
    fixed), so ``len(conv_channels)`` stages shrink T by 2**stages.
    """

    input_dim: int = 16
    conv_channels: list[int] = field(default_factory=lambda: [32])
    model_dim: int = 32
    emb_dim: int = 8
    fusion: str = "none"
    fusion_weight: float = 0.2
    # if True, weighted_sum computes (1-w)*h + w*e instead of h + w*e
    fusion_convex: bool = False
    n_layers: int = 4
    n_heads: int = 2
    ffn_dim: int = 64
    ctc_taps: list[int] = field(default_factory=lambda: [1, 2, 3])
    accent_tap: int = 2
    head_hidden: int = 256
    vocab_size: int = 12
    n_accents: int = 6

    def __post_init__(self):
        self.validate()

    @property
    def n_conv_stages(self) -> int:
        return len(self.conv_channels)

    @property
    def downsample(self) -> int:
        return 2**self.n_conv_stages

    @property
    def width(self) -> int:
        """Transformer width M' after fusion."""
        return self.model_dim + self.emb_dim if self.fusion == "concat" else self.model_dim

    def validate(self) -> None:
        if self.fusion not in FUSION_MODES:
            raise ConfigError("model.fusion", f"must be one of {FUSION_MODES}, got {self.fusion!r}")
        if self.fusion == "weighted_sum" and self.emb_dim != self.model_dim:
            raise ConfigError(
                "model.emb_dim",
                f"weighted_sum fusion needs emb_dim == model_dim, got {self.emb_dim} != {self.model_dim}",
            )
        if not self.conv_channels:
            raise ConfigError("model.conv_channels", "need at least one conv stage")
        if self.n_layers < 1:
            raise ConfigError("model.n_layers", "need at least one transformer layer")
        for tap in self.ctc_taps:
            if not 1 <= tap <= self.n_layers:
                raise ConfigError("model.ctc_taps", f"tap {tap} outside [1, {self.n_layers}]")
        if len(set(self.ctc_taps)) != len(self.ctc_taps):
            raise ConfigError("model.ctc_taps", "tap layers must be distinct")
        if not 1 <= self.accent_tap <= self.n_layers:
            raise ConfigError(
                "model.accent_tap", f"tap {self.accent_tap} outside [1, {self.n_layers}]"
            )
        if self.width % self.n_heads != 0:
            raise ConfigError(
                "model.n_heads",
                f"transformer width {self.width} not divisible by {self.n_heads} heads",
            )
        if self.vocab_size < 2:
            raise ConfigError("model.vocab_size", "need blank plus at least one token")
        if self.n_accents < 1:
            raise ConfigError("model.n_accents", "need at least one accent")
        if not 0.0 <= self.fusion_weight <= 1.0:
            raise ConfigError("model.fusion_weight", "must lie in [0, 1]")

    @classmethod
    def desk(cls, fusion: str = "none", **overrides) -> "ModelConfig":
        """Small configuration that trains in seconds on a CPU.

        Keeps the reference ratios: taps at 1/4, 1/2, 3/4 of the stack and the
        accent tap just past 1/4 depth.
        """
        base = dict(
            input_dim=16,
            conv_channels=[32],
            model_dim=32,
            emb_dim=8,
            fusion=fusion,
            n_layers=4,
            n_heads=2,
            ffn_dim=64,
            ctc_taps=[1, 2, 3],
            accent_tap=2,
            head_hidden=32,
            vocab_size=12,
            n_accents=6,
        )
        if fusion == "concat":
            base["model_dim"] = 24
        elif fusion == "weighted_sum":
            base["emb_dim"] = base["model_dim"]
        base.update(overrides)
        return cls(**base)
