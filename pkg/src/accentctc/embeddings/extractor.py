"""Self-supervised utterance-embedding extractor.

A small stand-in for a pretrained speech encoder: a frame-window MLP is first
pretrained with masked-frame reconstruction on unlabeled frames, then
fine-tuned as a mean-pooled accent classifier under a weighted sampler. The
pooled hidden vector (before the softmax) is the utterance embedding; vectors
are z-normalized with statistics frozen on the fitting corpus.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .. import nncore as nc
from ..errors import ContractError, ExtractionError
from ..model.losses import ce_loss
from ..nncore.tensor import Tensor
from .sampler import WeightedAccentSampler, default_sampler_weights
from .table import EmbeddingTable, z_normalize


def frame_windows(frames: np.ndarray, window: int) -> np.ndarray:
    """(T, F) -> (T, window*F) zero-padded context windows, center at frame t."""
    if window % 2 != 1:
        raise ContractError(f"window must be odd, got {window}")
    t, f = frames.shape
    half = window // 2
    padded = np.pad(frames, ((half, half), (0, 0)))
    return np.concatenate([padded[i : i + t] for i in range(window)], axis=1)


class AccentEmbeddingExtractor(BaseEstimator, TransformerMixin):
    """Pretrain, fine-tune, and extract pooled accent embeddings.

    Parameters follow the sklearn convention (stored verbatim, all work in
    ``fit``). Attributes ending in underscores exist only after fitting:
    ``params_``, ``classes_``, ``norm_stats_``, ``val_accuracy_``,
    ``val_trace_``.
    """

    def __init__(
        self,
        emb_dim: int = 8,
        hidden_dim: int = 32,
        window: int = 3,
        pretrain_epochs: int = 3,
        finetune_epochs: int = 10,
        pretrain_batch: int = 256,
        finetune_batch: int = 32,
        # fine-tuning passes over the data per epoch; small corpora need >1
        # to give Adam enough steps
        finetune_rounds: int = 4,
        mask_rate: float = 0.5,
        lr: float = 1e-2,
        dominant_accent: int = 0,
        dominant_weight: float = 0.1,
        val_fraction: float = 0.1,
        seed: int = 0,
    ):
        self.emb_dim = emb_dim
        self.hidden_dim = hidden_dim
        self.window = window
        self.pretrain_epochs = pretrain_epochs
        self.finetune_epochs = finetune_epochs
        self.pretrain_batch = pretrain_batch
        self.finetune_batch = finetune_batch
        self.finetune_rounds = finetune_rounds
        self.mask_rate = mask_rate
        self.lr = lr
        self.dominant_accent = dominant_accent
        self.dominant_weight = dominant_weight
        self.val_fraction = val_fraction
        self.seed = seed

    # ---- internals -------------------------------------------------------

    def _encode(self, windows: Tensor) -> Tensor:
        h = nc.relu(windows @ self.params_["enc1/w"] + self.params_["enc1/b"])
        return h @ self.params_["enc2/w"] + self.params_["enc2/b"]

    def _pooled(self, windows_3d: Tensor) -> Tensor:
        emb = self._encode(windows_3d)
        pooled = nc.mean_over(emb, axis=-2, keepdims=True)
        return pooled.reshape(windows_3d.shape[0], self.emb_dim)

    def _class_probs(self, pooled: Tensor) -> Tensor:
        return nc.softmax(pooled @ self.params_["cls/w"] + self.params_["cls/b"])

    def _group_by_length(self, utterances):
        groups: dict[int, list[int]] = {}
        for i, u in enumerate(utterances):
            groups.setdefault(u.frames.shape[0], []).append(i)
        return groups

    def _raw_embeddings(self, utterances) -> np.ndarray:
        out = np.zeros((len(utterances), self.emb_dim))
        with nc.no_grad():
            for t, idx in self._group_by_length(utterances).items():
                wins = np.stack([frame_windows(utterances[i].frames, self.window) for i in idx])
                out[idx] = self._pooled(Tensor(wins)).data
        return out

    # ---- estimator API ----------------------------------------------------

    def fit(self, X, y=None):
        """Fit on a sequence of utterances (objects with .frames and .accent).

        y optionally overrides the accent labels.
        """
        utterances = list(X)
        if not utterances:
            raise ContractError("cannot fit an extractor on an empty corpus")
        labels = np.asarray(
            [u.accent for u in utterances] if y is None else y, dtype=np.intp
        )
        rng = np.random.default_rng(self.seed)
        feat_dim = utterances[0].frames.shape[1]
        in_dim = self.window * feat_dim

        self.params_ = {
            "enc1/w": Tensor(nc.glorot_uniform(rng, in_dim, self.hidden_dim), requires_grad=True),
            "enc1/b": Tensor(np.zeros(self.hidden_dim), requires_grad=True),
            "enc2/w": Tensor(nc.glorot_uniform(rng, self.hidden_dim, self.emb_dim), requires_grad=True),
            "enc2/b": Tensor(np.zeros(self.emb_dim), requires_grad=True),
            "recon/w": Tensor(nc.glorot_uniform(rng, self.emb_dim, feat_dim), requires_grad=True),
            "recon/b": Tensor(np.zeros(feat_dim), requires_grad=True),
            "cls/w": Tensor(
                nc.glorot_uniform(rng, self.emb_dim, int(labels.max()) + 1), requires_grad=True
            ),
            "cls/b": Tensor(np.zeros(int(labels.max()) + 1), requires_grad=True),
        }
        self.classes_ = np.unique(labels)

        order = rng.permutation(len(utterances))
        n_val = max(1, int(self.val_fraction * len(utterances))) if len(utterances) > 1 else 0
        val_idx, fit_idx = order[:n_val], order[n_val:]

        self._pretrain([utterances[i] for i in fit_idx], rng)
        self._finetune(utterances, labels, fit_idx, val_idx, rng)

        raw = self._raw_embeddings([utterances[i] for i in fit_idx])
        _, self.norm_stats_ = z_normalize(raw)
        return self

    def _pretrain(self, utterances, rng) -> None:
        all_windows = np.concatenate(
            [frame_windows(u.frames, self.window) for u in utterances]
        )
        centers_lo = (self.window // 2) * (all_windows.shape[1] // self.window)
        centers_hi = centers_lo + all_windows.shape[1] // self.window
        opt = nc.Adam(
            {k: v for k, v in self.params_.items() if k.split("/")[0] in ("enc1", "enc2", "recon")},
            lr=self.lr,
        )
        steps = max(1, all_windows.shape[0] // self.pretrain_batch)
        for _epoch in range(self.pretrain_epochs):
            for _step in range(steps):
                idx = rng.choice(all_windows.shape[0], size=self.pretrain_batch, replace=False)
                batch = all_windows[idx].copy()
                target = batch[:, centers_lo:centers_hi].copy()
                masked = rng.random(len(idx)) < self.mask_rate
                batch[masked, centers_lo:centers_hi] = 0.0
                emb = self._encode(Tensor(batch))
                pred = emb @ self.params_["recon/w"] + self.params_["recon/b"]
                diff = pred - Tensor(target)
                loss = nc.mean_over(diff * diff)
                opt.zero_grad()
                loss.backward()
                opt.step()

    def _finetune(self, utterances, labels, fit_idx, val_idx, rng) -> None:
        weights = default_sampler_weights(
            labels[fit_idx], self.dominant_accent, self.dominant_weight
        )
        sampler = WeightedAccentSampler(labels[fit_idx], weights)
        opt = nc.Adam(self.params_, lr=self.lr)
        steps = max(1, self.finetune_rounds * len(fit_idx) // self.finetune_batch)
        self.val_trace_ = []
        for _epoch in range(self.finetune_epochs):
            for _step in range(steps):
                drawn = fit_idx[sampler.draw(self.finetune_batch, rng)]
                batch = [utterances[i] for i in drawn]
                total = None
                for _t, group in self._group_by_length(batch).items():
                    wins = np.stack(
                        [frame_windows(batch[i].frames, self.window) for i in group]
                    )
                    probs = self._class_probs(self._pooled(Tensor(wins)))
                    part = ce_loss(probs, labels[drawn[group]]) * (len(group) / len(batch))
                    total = part if total is None else total + part
                opt.zero_grad()
                total.backward()
                opt.step()
            if len(val_idx):
                self.val_trace_.append(self._accuracy(utterances, labels, val_idx))
        self.val_accuracy_ = self.val_trace_[-1] if self.val_trace_ else float("nan")

    def _accuracy(self, utterances, labels, idx) -> float:
        subset = [utterances[i] for i in idx]
        raw = self._raw_embeddings(subset)
        with nc.no_grad():
            probs = self._class_probs(Tensor(raw)).data
        return float((probs.argmax(axis=1) == labels[idx]).mean())

    def transform(self, X) -> np.ndarray:
        """Pooled, z-normalized embedding per utterance, shape (n, emb_dim)."""
        self._check_fitted()
        raw = self._raw_embeddings(list(X))
        normalized, _ = z_normalize(raw, self.norm_stats_)
        return normalized

    def per_accent_table(self, X, n_accents: int | None = None) -> EmbeddingTable:
        """Rows = mean transformed embedding per accent id 0..N-1."""
        utterances = list(X)
        vectors = self.transform(utterances)
        accents = np.asarray([u.accent for u in utterances], dtype=np.intp)
        n = int(n_accents if n_accents is not None else accents.max() + 1)
        rows = np.zeros((n, self.emb_dim))
        for a in range(n):
            mask = accents == a
            if not mask.any():
                raise ExtractionError(f"accent {a} has no utterances to average")
            rows[a] = vectors[mask].mean(axis=0)
        return EmbeddingTable(rows, "extracted_frozen", normalized=True)

    def _check_fitted(self) -> None:
        if not hasattr(self, "params_"):
            raise ContractError("extractor is not fitted; call fit first")
