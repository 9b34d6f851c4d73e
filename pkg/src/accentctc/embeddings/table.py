"""Accent embedding tables, z-normalization, corruption, and the JSONL file."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ContractError, UnknownAccentError

PROVENANCES = ("labeled_trainable", "extracted_frozen")


@dataclass
class EmbeddingTable:
    """One row per accent id, rows indexed 0..N-1."""

    matrix: np.ndarray
    provenance: str
    normalized: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ContractError(f"table must be 2-D, got shape {self.matrix.shape}")
        if self.provenance not in PROVENANCES:
            raise ContractError(f"provenance must be one of {PROVENANCES}")

    @property
    def n_accents(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def lookup(self, accent_id: int) -> np.ndarray:
        if not 0 <= accent_id < self.n_accents:
            raise UnknownAccentError(accent_id)
        return self.matrix[accent_id]

    def rows(self, accent_ids) -> np.ndarray:
        ids = np.asarray(accent_ids, dtype=np.intp)
        if ids.size and (ids.min() < 0 or ids.max() >= self.n_accents):
            raise UnknownAccentError(int(ids.max()))
        return self.matrix[ids]


def z_normalize(vectors: np.ndarray, stats: tuple[np.ndarray, np.ndarray] | None = None):
    """Per-dimension z-norm with population std.

    Returns (normalized, (mean, std)); pass `stats` to reuse frozen training
    statistics. Constant dimensions get std 1 to stay finite.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if stats is None:
        mean = vectors.mean(axis=0)
        std = vectors.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
    else:
        mean, std = stats
    return (vectors - mean) / std, (mean, std)


def corrupt_labels(labels, rate: float, rng: np.random.Generator, n_accents: int) -> np.ndarray:
    """Replace exactly floor(rate*n) labels, chosen uniformly without
    replacement, each by a uniform draw over the n_accents-1 other ids."""
    labels = np.asarray(labels, dtype=np.intp).copy()
    if not 0.0 <= rate <= 1.0:
        raise ContractError(f"corruption rate must lie in [0, 1], got {rate}")
    n_corrupt = int(rate * len(labels))
    if n_corrupt == 0:
        return labels
    if n_accents < 2:
        raise ContractError("cannot corrupt labels with a single-accent inventory")
    positions = rng.choice(len(labels), size=n_corrupt, replace=False)
    # draw over [0, N-2] and shift past the original label to guarantee change
    draws = rng.integers(0, n_accents - 1, size=n_corrupt)
    originals = labels[positions]
    labels[positions] = np.where(draws >= originals, draws + 1, draws)
    return labels


# ---------------------------------------------------------------------------
# embedding files: JSON lines {"key", "dim", "values"}
# ---------------------------------------------------------------------------


def save_embeddings(path: str | Path, records: dict[str, np.ndarray]) -> None:
    with open(path, "w") as fh:
        for key, values in records.items():
            vec = np.asarray(values, dtype=np.float64).reshape(-1)
            rec = {"key": key, "dim": int(vec.size), "values": [float(v) for v in vec]}
            fh.write(json.dumps(rec) + "\n")


def load_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            vec = np.array(rec["values"], dtype=np.float64)
            if vec.size != rec["dim"]:
                raise ContractError(
                    f"record {rec['key']!r} declares dim {rec['dim']} but has {vec.size} values"
                )
            out[rec["key"]] = vec
    return out


def save_table(path: str | Path, table: EmbeddingTable) -> None:
    save_embeddings(path, {str(a): table.matrix[a] for a in range(table.n_accents)})


def load_table(path: str | Path, provenance: str, normalized: bool = True) -> EmbeddingTable:
    records = load_embeddings(path)
    ids = sorted(int(k) for k in records)
    if ids != list(range(len(ids))):
        raise ContractError(f"table file keys must be 0..N-1, got {ids}")
    matrix = np.stack([records[str(a)] for a in ids])
    return EmbeddingTable(matrix, provenance, normalized)
