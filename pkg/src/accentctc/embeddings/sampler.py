"""Weighted per-accent utterance sampling for extractor fine-tuning."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, SamplerError


def default_sampler_weights(accents, dominant: int = 0, dominant_weight: float = 0.1):
    """Dominant accent gets `dominant_weight`, the rest split the remainder
    equally. With no other accents the dominant one takes everything."""
    accents = sorted(set(accents))
    others = [a for a in accents if a != dominant]
    if dominant not in accents:
        raise SamplerError(f"dominant accent {dominant} not present in {accents}")
    if not others:
        return {dominant: 1.0}
    share = (1.0 - dominant_weight) / len(others)
    weights = {a: share for a in others}
    weights[dominant] = dominant_weight
    return weights


class WeightedAccentSampler:
    """Draw utterance indices accent-first: pick an accent by weight, then a
    uniform utterance of that accent."""

    def __init__(self, accent_labels, weights: dict[int, float]):
        labels = np.asarray(accent_labels, dtype=np.intp)
        total = sum(weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ContractError(f"sampler weights must sum to 1, got {total}")
        self.accents = sorted(weights)
        self.probs = np.array([weights[a] for a in self.accents])
        if np.any(self.probs < 0):
            raise ContractError("sampler weights must be non-negative")
        self.pools = {}
        for a in self.accents:
            pool = np.flatnonzero(labels == a)
            if weights[a] > 0 and pool.size == 0:
                raise SamplerError(f"accent {a} has weight {weights[a]} but no utterances")
            self.pools[a] = pool

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        which = rng.choice(len(self.accents), size=n, p=self.probs)
        out = np.empty(n, dtype=np.intp)
        for i, w in enumerate(which):
            pool = self.pools[self.accents[w]]
            out[i] = pool[rng.integers(pool.size)]
        return out
