"""Greedy-decode evaluation, accent probing, and report-row assembly.

WER is pooled per group (total edit distance over total reference length)
for the three groups the experiments compare: the dominant accent, trained
non-dominant accents, and novel (held-out) accents. Empty groups are
reported as gaps (None), never as failures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ctc import greedy_decode, wer
from ..embeddings import corrupt_labels
from ..errors import ContractError, ExtractionError
from ..model import ModelConfig, forward_full
from ..nncore import Tensor, no_grad
from ..synthdata import Utterance

DOMINANT_ACCENT = 0


@dataclass
class EmbeddingPlan:
    """How evaluation-time utterances get their fusion embedding.

    ``labeled`` looks up (possibly corrupted) accent ids in the trained
    table; novel accents either keep their own untrained row or borrow the
    dominant accent's. ``extracted`` uses frozen per-utterance vectors and
    needs no strategy. Corruption affects exactly floor(rate * n) of the
    non-novel utterances, drawn from a seeded stream so repeated evaluations
    agree bit for bit.
    """

    source: str = "none"
    table: np.ndarray | None = None
    utt_embeddings: dict[str, np.ndarray] | None = None
    n_accents: int = 0
    novel_accents: frozenset = frozenset()
    novel_strategy: str = "untrained_row"
    corruption_rate: float = 0.0
    corruption_seed: int = 0

    def resolve(self, utts: list[Utterance]) -> np.ndarray | None:
        """Embedding matrix aligned with ``utts`` (None for source none)."""
        if self.source == "none":
            return None
        if self.source == "extracted":
            if self.utt_embeddings is None:
                raise ExtractionError("extracted plan has no utterance embeddings")
            missing = [u.uid for u in utts if u.uid not in self.utt_embeddings]
            if missing:
                raise ExtractionError(f"no embedding for utterances {missing[:5]}")
            return np.stack([self.utt_embeddings[u.uid] for u in utts])
        if self.table is None:
            raise ContractError("labeled plan has no embedding table")
        ids = np.array([u.accent for u in utts], dtype=np.intp)
        is_novel = np.isin(ids, sorted(self.novel_accents))
        if self.corruption_rate > 0.0 and (~is_novel).any():
            rng = np.random.default_rng(np.random.SeedSequence([self.corruption_seed, 829]))
            ids[~is_novel] = corrupt_labels(
                ids[~is_novel], self.corruption_rate, rng, self.n_accents
            )
        if is_novel.any() and self.novel_strategy == "dominant_accent_row":
            ids[is_novel] = DOMINANT_ACCENT
        return self.table[ids]


def _forward_groups(model_cfg: ModelConfig, params, utts, emb_all, mode="baseline"):
    """Yield (indices, lattices, accent_probs) per equal-length group."""
    by_len: dict[int, list[int]] = {}
    for i, u in enumerate(utts):
        by_len.setdefault(u.frames.shape[0], []).append(i)
    with no_grad():
        for t_len in sorted(by_len):
            idx = by_len[t_len]
            x = np.stack([utts[i].frames for i in idx])
            emb = None if emb_all is None else Tensor(emb_all[idx])
            lattices, probs = forward_full(model_cfg, params, x, emb, mode=mode)
            yield idx, lattices, probs


def decode_utterances(model_cfg, params, utts, plan: EmbeddingPlan) -> list[list[int]]:
    """Greedy best-path hypotheses, aligned with the input order."""
    if not utts:
        return []
    emb_all = plan.resolve(utts)
    hyps: list[list[int]] = [[] for _ in utts]
    for idx, lattices, _ in _forward_groups(model_cfg, params, utts, emb_all):
        final = lattices[-1].data
        for row, i in enumerate(idx):
            hyps[i] = greedy_decode(final[row])
    return hyps


def _pooled_wer(refs, hyps) -> float | None:
    if not refs:
        return None
    return wer(refs, hyps)


def wer_from_lattices(lattices, refs) -> float:
    """WER of greedy decodes of raw (T, V) log-prob lattices."""
    hyps = [greedy_decode(np.asarray(lat)) for lat in lattices]
    return wer(refs, hyps)


def evaluate(model_cfg, params, utts, plan: EmbeddingPlan, novel_accents=frozenset()) -> dict:
    """WER table over a test set: per accent plus the standard groupings."""
    hyps = decode_utterances(model_cfg, params, utts, plan)
    refs = [u.tokens for u in utts]
    accents = [u.accent for u in utts]
    novel = set(novel_accents)

    per_accent: dict[int, float] = {}
    for a in sorted(set(accents)):
        sel = [i for i, acc in enumerate(accents) if acc == a]
        per_accent[a] = _pooled_wer([refs[i] for i in sel], [hyps[i] for i in sel])

    def group_wer(member) -> float | None:
        sel = [i for i, a in enumerate(accents) if member(a)]
        return _pooled_wer([refs[i] for i in sel], [hyps[i] for i in sel])

    groups = {
        "dominant": group_wer(lambda a: a == DOMINANT_ACCENT),
        "non_dominant": group_wer(lambda a: a != DOMINANT_ACCENT and a not in novel),
        "novel": group_wer(lambda a: a in novel),
    }
    counts = {
        "dominant": sum(a == DOMINANT_ACCENT for a in accents),
        "non_dominant": sum(a != DOMINANT_ACCENT and a not in novel for a in accents),
        "novel": sum(a in novel for a in accents),
    }
    return {
        "per_accent": per_accent,
        "groups": groups,
        "counts": counts,
        "overall": _pooled_wer(refs, hyps),
    }


def probe_accent_accuracy(model_cfg, params, utts, plan: EmbeddingPlan) -> float:
    """Fraction of utterances whose accent the classifier head gets right.

    The forward pass uses the MTL routing, which shares the DAT forward
    exactly (gradient reversal is the identity on values).
    """
    if not utts:
        raise ContractError("cannot probe an empty utterance set")
    emb_all = plan.resolve(utts)
    hits = 0
    for idx, _, probs in _forward_groups(model_cfg, params, utts, emb_all, mode="mtl"):
        pred = probs.data.argmax(axis=-1)
        hits += sum(int(pred[row]) == utts[i].accent for row, i in enumerate(idx))
    return hits / len(utts)


def report_row(cfg, table: dict) -> dict:
    """Flatten one run's WER table into a report row."""
    t = cfg.train
    label = f"{t.mode}+{t.embedding_source}/{t.split}/seed{t.seed}"
    groups = table["groups"]
    return {
        "run": label,
        "split": t.split,
        "mode": t.mode,
        "embedding": t.embedding_source,
        "wer_non_dominant": groups["non_dominant"],
        "wer_novel": groups["novel"],
        "wer_dominant": groups["dominant"],
    }
