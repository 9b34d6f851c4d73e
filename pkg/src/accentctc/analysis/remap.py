"""Accent-to-group remapping over embedding centroids."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractError


def kmeans(points: np.ndarray, k: int, rng: np.random.Generator,
           restarts: int = 50, max_iter: int = 100):
    """Seeded Lloyd's algorithm, best inertia over `restarts` inits.

    Returns (centroids (k, D), assignment (n,)).
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k > n:
        raise ContractError(f"cannot place {k} clusters on {n} points")
    best = None
    for _ in range(restarts):
        centers = points[rng.choice(n, size=k, replace=False)].copy()
        assign = np.zeros(n, dtype=np.intp)
        for _it in range(max_iter):
            d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_assign = d2.argmin(axis=1)
            if np.array_equal(new_assign, assign) and _it > 0:
                break
            assign = new_assign
            for j in range(k):
                members = points[assign == j]
                if members.size:
                    centers[j] = members.mean(axis=0)
        inertia = ((points - centers[assign]) ** 2).sum()
        if best is None or inertia < best[0]:
            best = (inertia, centers, assign)
    return best[1], best[2]


@dataclass
class RemapTable:
    """Total map accent id -> group id, with the group centroids retained so
    novel accents can be assigned later."""

    mapping: dict[int, int]
    group_centroids: np.ndarray
    overrides: dict[int, int] = field(default_factory=dict)

    @property
    def groups(self) -> list[int]:
        return sorted(set(self.mapping.values()))

    def group_of(self, accent: int) -> int:
        return self.mapping[accent]

    def assign_novel(self, centroid: np.ndarray) -> int:
        """Nearest-group assignment for an accent unseen when the table was
        built; only groups that are actually in use are considered."""
        live = self.groups
        d2 = ((self.group_centroids[live] - np.asarray(centroid)) ** 2).sum(axis=1)
        return live[int(d2.argmin())]

    def save(self, path: str | Path) -> None:
        payload = {
            "mapping": {str(a): int(g) for a, g in sorted(self.mapping.items())},
            "overrides": {str(a): int(g) for a, g in sorted(self.overrides.items())},
            "group_centroids": [[float(v) for v in row] for row in self.group_centroids],
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RemapTable":
        payload = json.loads(Path(path).read_text())
        return cls(
            {int(a): int(g) for a, g in payload["mapping"].items()},
            np.array(payload["group_centroids"], dtype=np.float64),
            {int(a): int(g) for a, g in payload["overrides"].items()},
        )


def remap_accents(
    centroids: dict[int, np.ndarray],
    n_groups: int | None = None,
    group_seeds: np.ndarray | None = None,
    overrides: dict[int, int] | None = None,
    seed: int = 0,
) -> RemapTable:
    """Assign every accent to its nearest group centroid.

    Group centroids either come from `group_seeds` (given directly) or from
    seeded k-means with k = `n_groups` over the accent centroids. Overrides
    are applied after assignment and may leave a group empty, in which case a
    warning is emitted and the group drops out of the inventory.
    """
    if not centroids:
        raise ContractError("need at least one accent centroid")
    overrides = dict(overrides or {})
    accents = sorted(centroids)
    points = np.stack([np.asarray(centroids[a], dtype=np.float64) for a in accents])

    if group_seeds is not None:
        group_centroids = np.asarray(group_seeds, dtype=np.float64)
        d2 = ((points[:, None, :] - group_centroids[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
    elif n_groups is not None:
        group_centroids, assign = kmeans(points, n_groups, np.random.default_rng(seed))
    else:
        raise ContractError("pass either group_seeds or n_groups")

    mapping = {a: int(g) for a, g in zip(accents, assign)}
    for a, g in overrides.items():
        if a not in mapping:
            raise ContractError(f"override names unknown accent {a}")
        if not 0 <= g < group_centroids.shape[0]:
            raise ContractError(f"override names unknown group {g}")
        mapping[a] = int(g)
    used = set(mapping.values())
    for g in range(group_centroids.shape[0]):
        if g not in used:
            warnings.warn(f"group {g} is empty after assignment and was dropped")
    return RemapTable(mapping, group_centroids, overrides)
