"""Building blocks: conv subsampling, fusion, positions, transformer layer.

All functions accept hidden states of shape (T, dim) or batched (B, T, dim);
the time axis is always second to last.
"""

from __future__ import annotations

import numpy as np

from .. import nncore as nc
from ..errors import ConfigError, ShapeError
from ..nncore.tensor import Tensor


def linear(x: Tensor, params: dict, prefix: str) -> Tensor:
    return x @ params[f"{prefix}/w"] + params[f"{prefix}/b"]


def conv_subsample(x: Tensor, params: dict, n_stages: int) -> Tensor:
    """Stack of [unfold(3) -> linear -> relu -> maxpool(2)] stages.

    (.., T, F) becomes (.., T // 2**n_stages, C_last).
    """
    t = x.shape[-2]
    if t < 2**n_stages:
        raise ShapeError(f"need at least {2 ** n_stages} frames for {n_stages} stages, got {t}")
    h = x
    for i in range(n_stages):
        h = nc.unfold_time(h, 3)
        h = nc.relu(linear(h, params, f"conv{i}"))
        h = nc.maxpool_time(h, 2)
    return h


def fuse(hidden: Tensor, emb: Tensor | None, mode: str, weight: float = 0.2,
         convex: bool = False) -> Tensor:
    """Attach an accent embedding to every frame.

    concat appends the embedding to each frame vector (width M+D);
    weighted_sum adds ``weight * emb`` frame-wise (widths must match).
    """
    if mode == "none":
        return hidden
    if emb is None:
        raise ConfigError("model.fusion", f"fusion mode {mode!r} requires an embedding")
    if emb.ndim == hidden.ndim - 1:
        # (D,) against (T, M), or (B, D) against (B, T, M): insert a time axis
        emb = emb.reshape(*emb.shape[:-1], 1, emb.shape[-1])
    target_shape = hidden.shape[:-1] + (emb.shape[-1],)
    frames = nc.broadcast_to(emb, target_shape)
    if mode == "concat":
        return nc.concat([hidden, frames], axis=-1)
    if mode == "weighted_sum":
        if emb.shape[-1] != hidden.shape[-1]:
            raise ShapeError(
                f"weighted_sum needs matching widths, got {hidden.shape[-1]} and {emb.shape[-1]}"
            )
        if convex:
            return (1.0 - weight) * hidden + weight * frames
        return hidden + weight * frames
    raise ConfigError("model.fusion", f"unknown fusion mode {mode!r}")


def sinusoidal_positions(t: int, dim: int) -> np.ndarray:
    """Classic sin/cos positional table of shape (t, dim)."""
    pos = np.arange(t, dtype=np.float64)[:, None]
    i = np.arange(dim, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(i / 2.0) / dim)
    table = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return table


def self_attention(x: Tensor, params: dict, prefix: str, n_heads: int):
    """Multi-head scaled dot-product self-attention.

    Returns (output, attention weights as a plain array for inspection).
    """
    squeeze = x.ndim == 2
    if squeeze:
        x = x.reshape(1, *x.shape)
    b, t, width = x.shape
    if width % n_heads != 0:
        raise ConfigError("model.n_heads", f"width {width} not divisible by {n_heads}")
    dh = width // n_heads

    def split_heads(m: Tensor) -> Tensor:
        return m.reshape(b, t, n_heads, dh).swapaxes(1, 2)

    q = split_heads(linear(x, params, f"{prefix}/q"))
    k = split_heads(linear(x, params, f"{prefix}/k"))
    v = split_heads(linear(x, params, f"{prefix}/v"))
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(dh))
    attn = nc.softmax(scores)
    mixed = (attn @ v).swapaxes(1, 2).reshape(b, t, width)
    out = linear(mixed, params, f"{prefix}/o")
    if squeeze:
        out = out.reshape(t, width)
    return out, attn.data


def feed_forward(x: Tensor, params: dict, prefix: str) -> Tensor:
    return linear(nc.relu(linear(x, params, f"{prefix}/ffn1")), params, f"{prefix}/ffn2")


def transformer_layer(x: Tensor, params: dict, prefix: str, n_heads: int,
                      return_attn: bool = False):
    """Pre-norm block: x + attn(ln(x)), then + ffn(ln(.))."""
    attn_out, weights = self_attention(nc.layer_norm(x), params, prefix, n_heads)
    h = x + attn_out
    out = h + feed_forward(nc.layer_norm(h), params, prefix)
    if return_attn:
        return out, weights
    return out


def head_forward(x: Tensor, params: dict, prefix: str, log: bool = False) -> Tensor:
    """Classification head: linear -> relu -> linear -> (log_)softmax."""
    logits = linear(nc.relu(linear(x, params, f"{prefix}/h1")), params, f"{prefix}/h2")
    return nc.log_softmax(logits) if log else nc.softmax(logits)
