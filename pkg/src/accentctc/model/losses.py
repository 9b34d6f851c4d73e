"""Classification and CTC loss nodes over the autodiff graph."""

from __future__ import annotations

import numpy as np

from .. import nncore as nc
from ..ctc import ctc_loss_batch
from ..errors import ShapeError
from ..nncore.tensor import Tensor, _make

PROB_FLOOR = 1e-12

# Running count of probabilities that had to be clamped at PROB_FLOOR.
_clamp_warnings = 0


def clamp_warning_count() -> int:
    return _clamp_warnings


def reset_clamp_warnings() -> None:
    global _clamp_warnings
    _clamp_warnings = 0


def _picked_probs(probs: Tensor, labels) -> Tensor:
    global _clamp_warnings
    labels = np.asarray(labels, dtype=np.intp)
    if probs.ndim != 2 or labels.ndim != 1:
        raise ShapeError(f"expected (B, N) probs and (B,) labels, got {probs.shape}, {labels.shape}")
    picked = nc.take_along_last(probs, labels)
    _clamp_warnings += int((picked.data <= PROB_FLOOR).sum())
    return nc.clamp_min(picked, PROB_FLOOR)


def ce_loss(probs: Tensor, labels) -> Tensor:
    """Mean cross entropy -log P(y) over the batch."""
    return nc.mean_over(-nc.log(_picked_probs(probs, labels)))


def focal_loss(probs: Tensor, labels, gamma: float) -> Tensor:
    """Mean focal loss -(1 - P(y))^gamma * log P(y) over the batch.

    At gamma = 0 the modulating factor is exactly 1, so the value (and the
    whole graph it builds) reduces to plain cross entropy.
    """
    p = _picked_probs(probs, labels)
    modulator = nc.clamp_min(1.0 - p, PROB_FLOOR) ** float(gamma)
    return nc.mean_over(modulator * -nc.log(p))


def ctc_loss_node(lattice: Tensor, targets: list[list[int]]) -> tuple[Tensor, np.ndarray]:
    """Mean CTC loss as a graph node plus the per-utterance loss values.

    The DP (and its exact gradient) runs outside the graph; the node splices
    the analytic gradient back in, so backward() through the lattice tensor
    behaves like any other op.
    """
    data = lattice.data
    if data.ndim == 2:
        data = data[None]
    losses, grads = ctc_loss_batch(data, targets)
    if lattice.ndim == 2:
        grads = grads[0]
    mean = np.asarray(losses.mean())

    def grad_fn(g, out):
        return (g * grads / len(targets),)

    return _make(mean, (lattice,), grad_fn, "ctc"), losses
