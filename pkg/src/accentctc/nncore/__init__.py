from .tensor import (
    Tensor,
    add,
    broadcast_to,
    clamp_min,
    concat,
    embedding_lookup,
    exp,
    gradient_reversal,
    layer_norm,
    log,
    log_softmax,
    matmul,
    maxpool_time,
    mean_over,
    mul,
    no_grad,
    relu,
    set_debug_checks,
    softmax,
    sum_over,
    take_along_last,
    unfold_time,
)
from .optim import Adam, AdamState, glorot_uniform
from .checkpoint import load_params, save_params

__all__ = [
    "Adam",
    "AdamState",
    "Tensor",
    "add",
    "broadcast_to",
    "clamp_min",
    "concat",
    "embedding_lookup",
    "exp",
    "glorot_uniform",
    "gradient_reversal",
    "layer_norm",
    "load_params",
    "log",
    "log_softmax",
    "matmul",
    "maxpool_time",
    "mean_over",
    "mul",
    "no_grad",
    "relu",
    "save_params",
    "set_debug_checks",
    "softmax",
    "sum_over",
    "take_along_last",
    "unfold_time",
]
