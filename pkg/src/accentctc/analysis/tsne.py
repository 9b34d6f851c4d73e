"""Exact (quadratic) t-SNE with perplexity calibration."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..errors import ContractError


def _squared_distances(x: np.ndarray) -> np.ndarray:
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def _calibrate_row(d2_row: np.ndarray, target_entropy: float, iters: int = 50):
    """Binary-search the precision beta so the row's Shannon entropy matches
    log(perplexity)."""
    beta, lo, hi = 1.0, 0.0, np.inf
    p = np.zeros_like(d2_row)
    for _ in range(iters):
        p = np.exp(-d2_row * beta)
        total = p.sum()
        if total <= 0:
            entropy = 0.0
            p[:] = 0.0
        else:
            p /= total
            nz = p > 0
            entropy = float(-(p[nz] * np.log(p[nz])).sum())
        if abs(entropy - target_entropy) < 1e-7:
            break
        if entropy > target_entropy:
            lo = beta
            beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
        else:
            hi = beta
            beta = (lo + beta) / 2.0
    return p


def joint_probabilities(x: np.ndarray, perplexity: float) -> np.ndarray:
    n = x.shape[0]
    d2 = _squared_distances(x)
    target = np.log(perplexity)
    cond = np.zeros((n, n))
    idx = np.arange(n)
    for i in range(n):
        row = np.delete(d2[i], i)
        p = _calibrate_row(row, target)
        cond[i, idx != i] = p
    joint = (cond + cond.T) / (2.0 * n)
    return np.maximum(joint, 1e-12)


class ExactTSNE(BaseEstimator):
    """O(n^2) t-SNE, deterministic for a fixed seed.

    Gradient descent with momentum, per-coordinate gains, and early
    exaggeration for the first quarter of the iterations.
    """

    def __init__(
        self,
        perplexity: float = 15.0,
        iterations: int = 400,
        learning_rate: float = 100.0,
        exaggeration: float = 12.0,
        seed: int = 0,
    ):
        self.perplexity = perplexity
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.exaggeration = exaggeration
        self.seed = seed

    def fit_transform(self, X, y=None) -> np.ndarray:
        x = np.asarray(X, dtype=np.float64)
        n = x.shape[0]
        if self.perplexity >= n:
            raise ContractError(
                f"perplexity {self.perplexity} must be smaller than n = {n}"
            )
        p = joint_probabilities(x, self.perplexity)
        rng = np.random.default_rng(self.seed)
        y_emb = 1e-4 * rng.normal(size=(n, 2))
        velocity = np.zeros_like(y_emb)
        gains = np.ones_like(y_emb)
        exag_until = self.iterations // 4

        for it in range(self.iterations):
            pij = p * self.exaggeration if it < exag_until else p
            d2 = _squared_distances(y_emb)
            num = 1.0 / (1.0 + d2)
            np.fill_diagonal(num, 0.0)
            q = np.maximum(num / num.sum(), 1e-12)
            force = (pij - q) * num
            grad = 4.0 * ((np.diag(force.sum(axis=1)) - force) @ y_emb)
            momentum = 0.5 if it < exag_until else 0.8
            agree = np.sign(grad) == np.sign(velocity)
            gains = np.where(agree, gains * 0.8, gains + 0.2)
            gains = np.maximum(gains, 0.01)
            velocity = momentum * velocity - self.learning_rate * gains * grad
            y_emb = y_emb + velocity
            y_emb = y_emb - y_emb.mean(axis=0)
        self.embedding_ = y_emb
        return y_emb


def tsne(points, perplexity: float, iterations: int = 400, seed: int = 0) -> np.ndarray:
    return ExactTSNE(perplexity=perplexity, iterations=iterations, seed=seed).fit_transform(points)
