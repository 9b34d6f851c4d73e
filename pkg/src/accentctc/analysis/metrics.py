"""Clustering agreement metrics."""

from __future__ import annotations

import numpy as np


def _comb2(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) / 2.0


def adjusted_rand_index(labels_a, labels_b) -> float:
    """ARI from the contingency table; 1.0 for identical partitions, ~0 for
    independent ones."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError(f"label arrays differ in shape: {a.shape} vs {b.shape}")
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)
    sum_cells = _comb2(table).sum()
    sum_rows = _comb2(table.sum(axis=1)).sum()
    sum_cols = _comb2(table.sum(axis=0)).sum()
    expected = sum_rows * sum_cols / _comb2(np.array(n))
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def knn_purity(points, labels, k: int = 5) -> float:
    """Mean fraction of each point's k nearest neighbors (self excluded)
    sharing its label."""
    x = np.asarray(points, dtype=np.float64)
    y = np.asarray(labels)
    n = x.shape[0]
    if k >= n:
        raise ValueError(f"k = {k} must be smaller than n = {n}")
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, np.inf)
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    same = (y[nearest] == y[:, None]).mean(axis=1)
    return float(same.mean())
