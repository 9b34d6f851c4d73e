"""CTC loss, greedy best-path decoding and edit-distance metrics.

The loss marginalizes over every monotonic frame alignment that collapses to
the target sequence, with blank id 0 separating repeats and absorbing
unlabeled frames. All dynamic programming runs in log space; the gradient
with respect to the per-frame log-probabilities is returned alongside the
loss (it is minus the state-occupancy posterior), so callers can splice it
into an autodiff graph without re-deriving anything.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ContractError, FeasibilityError, ShapeError, UndefinedWerError

BLANK = 0

NEG_INF = -np.inf


def min_frames_for(target: Sequence[int]) -> int:
    """Shortest lattice that can still emit `target`: L plus one forced blank
    per adjacent repeat."""
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def _extend_with_blanks(target: Sequence[int]) -> np.ndarray:
    z = np.full(2 * len(target) + 1, BLANK, dtype=np.intp)
    z[1::2] = target
    return z


def _validate_target(target: Sequence[int], n_labels: int) -> None:
    for tok in target:
        if not 1 <= tok < n_labels:
            raise ContractError(f"target token {tok} outside [1, {n_labels - 1}]")


def ctc_loss_batch(
    log_probs: np.ndarray, targets: Sequence[Sequence[int]]
) -> tuple[np.ndarray, np.ndarray]:
    """Per-utterance CTC losses and gradients for a (B, T, V) lattice batch.

    All utterances share the frame count T; targets may differ in length.
    Returns (losses (B,), grads (B, T, V)) where grads are with respect to
    the log-probability entries themselves.
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if log_probs.ndim != 3:
        raise ShapeError(f"expected (B, T, V) lattice batch, got shape {log_probs.shape}")
    b, t, v = log_probs.shape
    if t < 1:
        raise ShapeError("lattice needs at least one frame")
    if len(targets) != b:
        raise ShapeError(f"{b} lattices but {len(targets)} targets")

    s_max = 2 * max((len(tg) for tg in targets), default=0) + 1
    ext = np.full((b, s_max), BLANK, dtype=np.intp)
    s_len = np.empty(b, dtype=np.intp)
    for i, tg in enumerate(targets):
        _validate_target(tg, v)
        need = min_frames_for(tg)
        if t < need:
            raise FeasibilityError(t, len(tg), need)
        zi = _extend_with_blanks(tg)
        ext[i, : zi.size] = zi
        s_len[i] = zi.size

    pos = np.arange(s_max)
    valid = pos[None, :] < s_len[:, None]
    # A skip from s-2 is allowed at non-blank states whose label differs from
    # the label two steps back.
    can_skip = np.zeros((b, s_max), dtype=bool)
    can_skip[:, 2:] = (ext[:, 2:] != BLANK) & (ext[:, 2:] != ext[:, :-2])
    can_skip &= valid

    idx_b = np.arange(b)
    emit = log_probs[idx_b[:, None, None], np.arange(t)[None, :, None], ext[:, None, :]]
    emit = np.where(valid[:, None, :], emit, NEG_INF)  # (B, T, S)

    alpha = np.full((b, t, s_max), NEG_INF)
    alpha[:, 0, 0] = emit[:, 0, 0]
    if s_max > 1:
        has2 = s_len > 1
        alpha[has2, 0, 1] = emit[has2, 0, 1]
    for step in range(1, t):
        prev = alpha[:, step - 1, :]
        move = np.full_like(prev, NEG_INF)
        move[:, 1:] = prev[:, :-1]
        acc = np.logaddexp(prev, move)
        skip = np.full_like(prev, NEG_INF)
        skip[:, 2:] = prev[:, :-2]
        acc = np.where(can_skip, np.logaddexp(acc, skip), acc)
        alpha[:, step, :] = acc + emit[:, step, :]

    beta = np.full((b, t, s_max), NEG_INF)
    beta[idx_b, t - 1, s_len - 1] = 0.0
    multi = s_len > 1
    beta[idx_b[multi], t - 1, s_len[multi] - 2] = 0.0
    for step in range(t - 2, -1, -1):
        nxt = beta[:, step + 1, :] + emit[:, step + 1, :]
        move = np.full_like(nxt, NEG_INF)
        move[:, :-1] = nxt[:, 1:]
        acc = np.logaddexp(nxt, move)
        skip = np.full_like(nxt, NEG_INF)
        skip[:, :-2][can_skip[:, 2:]] = nxt[:, 2:][can_skip[:, 2:]]
        beta[:, step, :] = np.logaddexp(acc, skip)

    last = alpha[idx_b, t - 1, s_len - 1]
    second = alpha[idx_b, t - 1, np.maximum(s_len - 2, 0)]
    log_z = np.where(multi, np.logaddexp(last, second), last)
    losses = -log_z

    # Occupancy posterior per (t, s); scatter back onto vocabulary entries.
    with np.errstate(invalid="ignore"):
        occ = np.exp(alpha + beta - log_z[:, None, None])
    occ = np.where(valid[:, None, :], occ, 0.0)
    grads = np.zeros_like(log_probs)
    flat_idx = (
        np.arange(b)[:, None, None] * (t * v)
        + np.arange(t)[None, :, None] * v
        + ext[:, None, :]
    )
    np.add.at(grads.reshape(-1), flat_idx.reshape(-1), -occ.reshape(-1))
    return losses, grads


def ctc_loss(log_probs: np.ndarray, target: Sequence[int]) -> tuple[float, np.ndarray]:
    """CTC loss and gradient for one (T, V) log-probability lattice."""
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if log_probs.ndim != 2:
        raise ShapeError(f"expected (T, V) lattice, got shape {log_probs.shape}")
    losses, grads = ctc_loss_batch(log_probs[None], [list(target)])
    return float(losses[0]), grads[0]


def greedy_decode(log_probs: np.ndarray) -> list[int]:
    """Best path decoding: frame argmax, collapse repeats, drop blanks."""
    log_probs = np.asarray(log_probs)
    if log_probs.ndim != 2:
        raise ShapeError(f"expected (T, V) lattice, got shape {log_probs.shape}")
    best = np.argmax(log_probs, axis=-1)
    out: list[int] = []
    prev = -1
    for tok in best:
        if tok != prev and tok != BLANK:
            out.append(int(tok))
        prev = tok
    return out


def edit_distance(ref: Sequence[int], hyp: Sequence[int]) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    n, m = len(ref), len(hyp)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ref[i - 1] != hyp[j - 1])
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, sub)
        prev = cur
    return prev[m]


def wer(refs: Sequence[Sequence[int]], hyps: Sequence[Sequence[int]]) -> float:
    """Total edit distance divided by total reference length."""
    if len(refs) != len(hyps):
        raise ShapeError(f"{len(refs)} references vs {len(hyps)} hypotheses")
    total_len = sum(len(r) for r in refs)
    if total_len == 0:
        raise UndefinedWerError("total reference length is zero")
    total_dist = sum(edit_distance(r, h) for r, h in zip(refs, hyps))
    return total_dist / total_len
