"""Synthetic multi-accent corpus generator.

Utterances are token sequences rendered as frame features: each token has a
prototype vector, repeated for a fixed number of frames, then passed through
an accent-specific affine map (a rotation plus a bias) and Gaussian noise.
Accents live in latent regions: accents of one region share a base rotation
and differ by a smaller per-accent offset, so region structure is recoverable
from the features alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError, ContractError


@dataclass
class CorpusConfig:
    n_accents: int = 6
    n_regions: int = 3
    vocab_size: int = 12
    feature_dim: int = 16
    frames_per_token: int = 4
    min_tokens: int = 4
    max_tokens: int = 9
    # utterance counts per accent; accent 0 is the dominant one
    dominant_train: int = 400
    dominant_test: int = 60
    other_train: int = 60
    other_test: int = 30
    transform_strength: float = 0.6
    # per-accent offset as a fraction of the regional transform
    accent_offset_ratio: float = 0.35
    noise: float = 0.25
    # fraction of dominant-accent train utterances rendered with a random
    # other accent's transform while keeping the dominant label
    contamination: float = 0.0
    held_out: list[int] = field(default_factory=lambda: [3, 5])
    seed: int = 0

    def __post_init__(self):
        if self.n_accents < 1 or self.vocab_size < 2:
            raise ConfigError("data.n_accents", "need >= 1 accent and vocab >= 2")
        if self.n_regions < 1 or self.n_regions > self.n_accents:
            raise ConfigError("data.n_regions", f"regions must lie in [1, {self.n_accents}]")
        if not 0 <= self.min_tokens <= self.max_tokens:
            raise ConfigError("data.min_tokens", "need 0 <= min_tokens <= max_tokens")
        for a in self.held_out:
            if not 0 <= a < self.n_accents:
                raise ConfigError("data.held_out", f"unknown accent id {a}")
        if 0 in self.held_out:
            raise ConfigError("data.held_out", "the dominant accent cannot be held out")
        if not 0.0 <= self.contamination <= 1.0:
            raise ConfigError("data.contamination", "must lie in [0, 1]")


@dataclass
class Utterance:
    uid: str
    accent: int
    split: str
    tokens: list[int]
    frames: np.ndarray


@dataclass
class Corpus:
    utterances: list[Utterance]
    config: CorpusConfig | None = None
    prototypes: np.ndarray | None = None
    # accent id -> (rotation matrix, bias vector)
    transforms: dict[int, tuple[np.ndarray, np.ndarray]] | None = None

    def __iter__(self):
        return iter(self.utterances)

    def __len__(self):
        return len(self.utterances)

    def by_split(self, split: str) -> list[Utterance]:
        return [u for u in self.utterances if u.split == split]

    def by_accent(self, accent: int) -> list[Utterance]:
        return [u for u in self.utterances if u.accent == accent]


def region_of(accent: int, cfg: CorpusConfig) -> int:
    """Accents are assigned to regions in contiguous blocks."""
    per = -(-cfg.n_accents // cfg.n_regions)
    return accent // per


def _skew(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.normal(size=(d, d))
    k = (g - g.T) / 2.0
    return k / max(np.abs(k).max(), 1e-12)


def accent_transforms(cfg: CorpusConfig, rng: np.random.Generator):
    """Rotation + bias per accent: expm of a regional skew base plus a smaller
    per-accent skew offset, so the map is exactly orthogonal at any strength."""
    d = cfg.feature_dim
    s = cfg.transform_strength
    rho = cfg.accent_offset_ratio
    region_skew = [_skew(rng, d) for _ in range(cfg.n_regions)]
    region_bias = [rng.normal(size=d) for _ in range(cfg.n_regions)]
    out: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for a in range(cfg.n_accents):
        r = region_of(a, cfg)
        rot = expm(s * (region_skew[r] + rho * _skew(rng, d)))
        bias = s * (region_bias[r] + rho * rng.normal(size=d))
        out[a] = (rot, bias)
    return out


def render_frames(tokens, prototypes: np.ndarray, transform, frames_per_token: int,
                  noise: float, rng: np.random.Generator) -> np.ndarray:
    rot, bias = transform
    base = np.repeat(prototypes[np.asarray(tokens, dtype=np.intp)], frames_per_token, axis=0)
    frames = base @ rot + bias
    if noise > 0:
        frames = frames + noise * rng.normal(size=frames.shape)
    return frames


def generate_corpus(cfg: CorpusConfig) -> Corpus:
    """Deterministic corpus: same config (incl. seed) -> bit-identical output.

    Utterance contents come from per-utterance derived seeds, so the result
    does not depend on generation order.
    """
    master = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    prototypes = master.normal(size=(cfg.vocab_size, cfg.feature_dim))
    transforms = accent_transforms(cfg, master)

    plan: list[tuple[int, str]] = []
    for a in range(cfg.n_accents):
        n_train = cfg.dominant_train if a == 0 else cfg.other_train
        n_test = cfg.dominant_test if a == 0 else cfg.other_test
        plan.extend((a, "train") for _ in range(n_train))
        plan.extend((a, "test") for _ in range(n_test))

    seeds = np.random.SeedSequence(cfg.seed).spawn(len(plan))
    utterances: list[Utterance] = []
    for i, ((accent, split), seq) in enumerate(zip(plan, seeds)):
        rng = np.random.default_rng(seq)
        n_tokens = int(rng.integers(cfg.min_tokens, cfg.max_tokens + 1))
        tokens = [int(t) for t in rng.integers(1, cfg.vocab_size, size=n_tokens)]
        render_as = accent
        if (
            accent == 0
            and split == "train"
            and cfg.contamination > 0
            and cfg.n_accents > 1
            and rng.random() < cfg.contamination
        ):
            render_as = int(rng.integers(1, cfg.n_accents))
        frames = render_frames(
            tokens, prototypes, transforms[render_as], cfg.frames_per_token, cfg.noise, rng
        )
        utterances.append(Utterance(f"u{i:05d}", accent, split, tokens, frames))
    return Corpus(utterances, cfg, prototypes, transforms)


def speed_perturb(frames: np.ndarray, factor: float) -> np.ndarray:
    """Resample the time axis to T' = round(T / factor), nearest frame."""
    if factor <= 0:
        raise ContractError(f"speed factor must be positive, got {factor}")
    t = frames.shape[0]
    t_new = int(round(t / factor))
    if t_new == 0:
        raise ContractError(f"factor {factor} leaves no frames from T={t}")
    if t_new == t:
        return frames.copy()
    src = np.clip(np.round(np.arange(t_new) * factor).astype(np.intp), 0, t - 1)
    return frames[src]


@dataclass
class SplitView:
    train: list[Utterance]
    test: list[Utterance]
    novel_accents: set[int]


def split(corpus: Corpus, mode: str) -> SplitView:
    """*all*: every accent in train and test. *s18*: the configured held-out
    accents are removed from train and marked novel; their test data stays."""
    if mode not in ("all", "s18"):
        raise ConfigError("train.split", f"must be 'all' or 's18', got {mode!r}")
    cfg = corpus.config
    train = corpus.by_split("train")
    test = corpus.by_split("test")
    if mode == "all":
        return SplitView(train, test, set())
    if cfg is None:
        raise ConfigError("train.split", "s18 split needs the corpus config (held-out ids)")
    held = set(cfg.held_out)
    return SplitView([u for u in train if u.accent not in held], test, held)


# ---------------------------------------------------------------------------
# JSONL corpus files
# ---------------------------------------------------------------------------


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w") as fh:
        for u in corpus.utterances:
            rec = {
                "id": u.uid,
                "accent": u.accent,
                "split": u.split,
                "tokens": u.tokens,
                "frames": [[float(v) for v in row] for row in u.frames],
            }
            fh.write(json.dumps(rec) + "\n")


def load_corpus(path: str | Path, config: CorpusConfig | None = None) -> Corpus:
    utterances = []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            utterances.append(
                Utterance(
                    rec["id"],
                    int(rec["accent"]),
                    rec["split"],
                    [int(t) for t in rec["tokens"]],
                    np.array(rec["frames"], dtype=np.float64),
                )
            )
    return Corpus(utterances, config)


def nearest_prototype_tokens(utterance: Utterance, corpus: Corpus) -> list[int]:
    """Oracle decoder: undo the accent transform, then match each token's
    frame block to its nearest prototype. Exact when noise is zero."""
    if corpus.prototypes is None or corpus.transforms is None or corpus.config is None:
        raise ContractError("nearest-prototype decoding needs generator internals")
    rot, bias = corpus.transforms[utterance.accent]
    clean = (utterance.frames - bias) @ rot.T
    fpt = corpus.config.frames_per_token
    tokens = []
    for start in range(0, clean.shape[0], fpt):
        block = clean[start : start + fpt].mean(axis=0)
        d2 = ((corpus.prototypes - block) ** 2).sum(axis=1)
        tokens.append(int(d2.argmin()))
    return tokens
