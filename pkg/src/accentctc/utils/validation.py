"""Light input-validation helpers shared by the public entry points."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, ShapeError


def check_random_state(seed) -> np.random.Generator:
    """None, an int seed, or a Generator -> a Generator."""
    if seed is None:
        return np.random.default_rng()
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.default_rng(int(seed))
    raise ContractError(f"seed must be None, an int, or a Generator, got {type(seed).__name__}")


def check_frames(frames, feature_dim: int | None = None) -> np.ndarray:
    """Validate one utterance's (T, F) frame matrix."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"frames must be 2-D (T, F), got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ShapeError("need at least one frame")
    if feature_dim is not None and arr.shape[1] != feature_dim:
        raise ShapeError(f"expected feature dim {feature_dim}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("frames contain non-finite values")
    return arr


def check_utterances(X) -> list:
    """Materialize an utterance sequence and verify the duck-typed fields."""
    utts = list(X)
    if not utts:
        raise ContractError("need at least one utterance")
    for u in utts:
        for attr in ("uid", "accent", "tokens", "frames"):
            if not hasattr(u, attr):
                raise ContractError(f"utterance missing field {attr!r}")
    return utts
