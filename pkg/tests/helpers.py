"""Shared test utilities: finite-difference oracles and brute-force CTC."""

from __future__ import annotations

import itertools

import numpy as np

from accentctc.ctc import BLANK


def rel_err(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """Max-norm relative error with a floor for near-zero gradients.

    Whole-model finite-difference checks pass floor=1e-6: central differences
    at h=1e-5 carry ~1e-10 of roundoff noise, which would otherwise dominate
    parameters whose true gradient is exactly zero (e.g. key-projection biases,
    which cancel under softmax).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), floor)
    return float(np.abs(a - b).max(initial=0.0) / denom)


def central_diff(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Dense central finite differences of scalar f at x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = g.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + h
        fp = f(x)
        xf[i] = orig - h
        fm = f(x)
        xf[i] = orig
        flat[i] = (fp - fm) / (2 * h)
    return g


def central_diff_coords(f, arr: np.ndarray, coords, h: float = 1e-6) -> np.ndarray:
    """Central differences of scalar f() at selected flat coordinates of arr,
    perturbing arr in place between calls."""
    flat = arr.reshape(-1)
    out = np.zeros(len(coords))
    for k, i in enumerate(coords):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        out[k] = (fp - fm) / (2 * h)
    return out


def brute_force_ctc(log_probs: np.ndarray, target: list[int]) -> float:
    """CTC loss by enumerating all V^T frame paths and summing the
    probability of those that collapse to the target."""
    t, v = log_probs.shape
    total = 0.0
    for path in itertools.product(range(v), repeat=t):
        collapsed = []
        prev = -1
        for tok in path:
            if tok != prev and tok != BLANK:
                collapsed.append(tok)
            prev = tok
        if collapsed == list(target):
            total += float(np.exp(sum(log_probs[i, tok] for i, tok in enumerate(path))))
    return float(-np.log(total)) if total > 0 else float("inf")


def random_log_lattice(rng: np.random.Generator, t: int, v: int) -> np.ndarray:
    """Random valid lattice: each row is a normalized log-distribution."""
    logits = rng.normal(size=(t, v))
    logits -= logits.max(axis=1, keepdims=True)
    return logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
