"""Linear Discriminant Analysis projection."""

from __future__ import annotations

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, TransformerMixin

from ..errors import ShapeError


class LinearDiscriminantReducer(BaseEstimator, TransformerMixin):
    """Project onto the top generalized eigenvectors of S_w^-1 S_b.

    The within-class scatter is regularized by eps*I with
    eps = 1e-6 * trace(S_w) / D. Component signs are canonicalized (largest
    absolute coefficient positive) so fits are reproducible.
    """

    def __init__(self, out_dim: int = 2):
        self.out_dim = out_dim

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        classes = np.unique(y)
        d = X.shape[1]
        k_max = min(d, len(classes) - 1)
        if self.out_dim > k_max:
            raise ShapeError(
                f"out_dim {self.out_dim} exceeds min(D, classes-1) = {k_max}"
            )
        if X.shape[0] <= len(classes):
            raise ShapeError(f"need more points ({X.shape[0]}) than classes ({len(classes)})")

        mean = X.mean(axis=0)
        s_w = np.zeros((d, d))
        s_b = np.zeros((d, d))
        for c in classes:
            xc = X[y == c]
            mu = xc.mean(axis=0)
            centered = xc - mu
            s_w += centered.T @ centered
            gap = (mu - mean)[:, None]
            s_b += xc.shape[0] * (gap @ gap.T)
        eps = 1e-6 * np.trace(s_w) / d
        if eps == 0.0:
            eps = 1e-12
        vals, vecs = scipy.linalg.eigh(s_b, s_w + eps * np.eye(d))
        top = vecs[:, ::-1][:, : self.out_dim]
        flip = np.sign(top[np.abs(top).argmax(axis=0), np.arange(self.out_dim)])
        self.components_ = top * np.where(flip == 0, 1.0, flip)
        self.eigenvalues_ = vals[::-1][: self.out_dim].copy()
        self.classes_ = classes
        return self

    def transform(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.components_


def lda_reduce(points, labels, out_dim: int) -> np.ndarray:
    return LinearDiscriminantReducer(out_dim).fit_transform(points, labels)
