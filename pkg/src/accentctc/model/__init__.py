from .config import FUSION_MODES, TRAIN_MODES, ModelConfig
from .layers import (
    conv_subsample,
    feed_forward,
    fuse,
    head_forward,
    linear,
    self_attention,
    sinusoidal_positions,
    transformer_layer,
)
from .losses import (
    ce_loss,
    clamp_warning_count,
    ctc_loss_node,
    focal_loss,
    reset_clamp_warnings,
)
from .network import GRL_COEFF, forward_full, init_model_params, param_groups

__all__ = [
    "FUSION_MODES",
    "TRAIN_MODES",
    "ModelConfig",
    "conv_subsample",
    "feed_forward",
    "fuse",
    "head_forward",
    "linear",
    "self_attention",
    "sinusoidal_positions",
    "transformer_layer",
    "ce_loss",
    "clamp_warning_count",
    "ctc_loss_node",
    "focal_loss",
    "reset_clamp_warnings",
    "GRL_COEFF",
    "forward_full",
    "init_model_params",
    "param_groups",
]
