"""Parameter initialization, grouping, and the full forward pass."""

from __future__ import annotations

import numpy as np

from .. import nncore as nc
from ..errors import ConfigError
from ..nncore.tensor import Tensor
from .config import TRAIN_MODES, ModelConfig
from .layers import conv_subsample, fuse, head_forward, linear, sinusoidal_positions, transformer_layer

GRL_COEFF = {"dat": -1.0, "mtl": +1.0}


def _linear_params(rng, fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
    return nc.glorot_uniform(rng, fan_in, fan_out), np.zeros(fan_out)


def init_model_params(cfg: ModelConfig, rng: np.random.Generator,
                      trainable_table: bool = False) -> dict[str, Tensor]:
    """Create every parameter tensor, named and seeded deterministically.

    Naming scheme (one flat dict):
      conv{i}/w|b       conv stage i
      proj/w|b          projection to model_dim
      layer{l}/{q,k,v,o}/w|b and layer{l}/ffn1|ffn2/w|b   transformer layer l (1-based)
      inter{l}/h1|h2/w|b   intermediate CTC head at tap layer l
      final_ctc/h1|h2/w|b  final CTC head
      accent/h1|h2/w|b     accent classifier head
      emb/table            labeled embedding table (only when requested)
    """
    params: dict[str, Tensor] = {}

    def put(name: str, fan_in: int, fan_out: int) -> None:
        w, b = _linear_params(rng, fan_in, fan_out)
        params[f"{name}/w"] = Tensor(w, requires_grad=True)
        params[f"{name}/b"] = Tensor(b, requires_grad=True)

    prev = cfg.input_dim
    for i, ch in enumerate(cfg.conv_channels):
        put(f"conv{i}", 3 * prev, ch)
        prev = ch
    put("proj", prev, cfg.model_dim)

    width = cfg.width
    for layer in range(1, cfg.n_layers + 1):
        for sub in ("q", "k", "v", "o"):
            put(f"layer{layer}/{sub}", width, width)
        put(f"layer{layer}/ffn1", width, cfg.ffn_dim)
        put(f"layer{layer}/ffn2", cfg.ffn_dim, width)

    def put_head(name: str, n_out: int) -> None:
        put(f"{name}/h1", width, cfg.head_hidden)
        put(f"{name}/h2", cfg.head_hidden, n_out)

    for tap in cfg.ctc_taps:
        put_head(f"inter{tap}", cfg.vocab_size)
    put_head("final_ctc", cfg.vocab_size)
    put_head("accent", cfg.n_accents)

    if trainable_table:
        params["emb/table"] = Tensor(
            nc.glorot_uniform(rng, cfg.n_accents, cfg.emb_dim), requires_grad=True
        )
    return params


def param_groups(cfg: ModelConfig, names) -> dict[str, list[str]]:
    """Split parameter names into encoder, CTC heads, accent head, embedding."""
    groups: dict[str, list[str]] = {"encoder": [], "final_ctc": [], "accent": [], "emb": []}
    for tap in cfg.ctc_taps:
        groups[f"inter{tap}"] = []
    for name in names:
        top = name.split("/")[0]
        if top in groups:
            groups[top].append(name)
        elif top == "emb":
            groups["emb"].append(name)
        else:
            groups["encoder"].append(name)
    return groups


def forward_full(cfg: ModelConfig, params: dict[str, Tensor], x, emb: Tensor | None = None,
                 mode: str = "baseline"):
    """Run the network end to end.

    Args:
        x: frames, shape (T, F) or (B, T, F); array or Tensor.
        emb: accent embedding, (D,) or (B, D); required unless fusion is none.
        mode: baseline (no accent branch), dat (reversed accent gradients into
            the encoder) or mtl (cooperative accent gradients).

    Returns:
        (lattices, accent_probs): lattices is a list of log-prob Tensors, one
        per intermediate tap in order plus the final head last, each with
        shape (.., T', V); accent_probs is a (B, N) Tensor (B=1 for unbatched
        input) or None in baseline mode.
    """
    if mode not in TRAIN_MODES:
        raise ConfigError("train.mode", f"must be one of {TRAIN_MODES}, got {mode!r}")
    if cfg.fusion != "none" and emb is None:
        raise ConfigError("model.fusion", f"fusion {cfg.fusion!r} requires an embedding")
    if not isinstance(x, Tensor):
        x = Tensor(x)

    h = conv_subsample(x, params, cfg.n_conv_stages)
    h = linear(h, params, "proj")
    h = fuse(h, emb, cfg.fusion, cfg.fusion_weight, cfg.fusion_convex)
    h = h + Tensor(sinusoidal_positions(h.shape[-2], h.shape[-1]))

    lattices: list[Tensor] = []
    accent_probs: Tensor | None = None
    tap_set = set(cfg.ctc_taps)
    for layer in range(1, cfg.n_layers + 1):
        h = transformer_layer(h, params, f"layer{layer}", cfg.n_heads)
        if layer in tap_set:
            lattices.append(head_forward(h, params, f"inter{layer}", log=True))
        if layer == cfg.accent_tap and mode != "baseline":
            pooled = nc.mean_over(h, axis=-2, keepdims=True)
            if h.ndim == 3:
                pooled = pooled.reshape(h.shape[0], h.shape[-1])
            routed = nc.gradient_reversal(pooled, GRL_COEFF[mode])
            accent_probs = head_forward(routed, params, "accent")
    lattices.append(head_forward(h, params, "final_ctc", log=True))
    return lattices, accent_probs
