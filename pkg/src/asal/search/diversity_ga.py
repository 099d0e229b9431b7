"""Genetic algorithm that spreads an archive over embedding space.

Each iteration mutates a random batch of members, evaluates their final
state embeddings, inserts them, and then repeatedly removes the most
crowded member (smallest average distance to its two nearest neighbors,
distance = 1 - similarity) until the archive is back at capacity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..objectives import diversity_score


@dataclass
class ArchiveMember:
    values: np.ndarray
    embedding: np.ndarray
    age: int  # insertion counter; smaller is older


@dataclass
class Archive:
    members: list[ArchiveMember]
    capacity: int
    inserted: int = 0  # total insertions ever, drives age

    def __post_init__(self):
        if self.inserted == 0:
            self.inserted = len(self.members)

    @property
    def embeddings(self) -> np.ndarray:
        return np.stack([m.embedding for m in self.members])

    @property
    def genomes(self) -> np.ndarray:
        return np.stack([m.values for m in self.members])

    def diversity(self) -> float:
        return diversity_score(self.embeddings)

    @staticmethod
    def from_genomes(genomes: np.ndarray, embeddings: np.ndarray, capacity: int) -> "Archive":
        members = [
            ArchiveMember(np.asarray(g, dtype=np.float64), np.asarray(e), i)
            for i, (g, e) in enumerate(zip(genomes, embeddings))
        ]
        return Archive(members, capacity)


class DivergenceBudgetExceeded(RuntimeError):
    def __init__(self, diverged: int, attempted: int):
        self.diverged = diverged
        self.attempted = attempted
        super().__init__(
            f"{diverged}/{attempted} mutants diverged; the search center is unstable"
        )


def _remove_most_crowded(sims: np.ndarray, active: np.ndarray, ages: np.ndarray) -> int:
    """Index of the member with the two most similar active neighbors.

    Crowding is the summed similarity of the two nearest neighbors (the
    smaller the average distance, the larger this sum). Ties remove the
    oldest member first.
    """
    rows = np.where(active)[0]
    sub = sims[np.ix_(rows, rows)].copy()
    np.fill_diagonal(sub, -np.inf)
    top2 = np.partition(sub, -2, axis=1)[:, -2:]
    crowding = top2.sum(axis=1)
    best = crowding.max()
    tied = rows[crowding == best]
    return int(tied[np.argmin(ages[tied])])


def ga_illuminate(
    archive: Archive,
    evaluate: Callable[[list[np.ndarray]], list[np.ndarray | None]],
    rng: np.random.Generator,
    iterations: int,
    batch: int = 32,
    mutation_sigma: float = 0.1,
    max_divergence_rate: float = 0.5,
    on_iteration: Callable[[int, Archive], None] | None = None,
) -> Archive:
    """Run the illumination loop and return the archive at capacity.

    evaluate maps a list of genomes to final embeddings, with None for
    rollouts that diverged; diverged mutants are dropped (they spend
    their slot in the batch). If the cumulative divergence rate exceeds
    max_divergence_rate the run aborts.
    """
    if len(archive.members) < archive.capacity:
        raise ValueError("archive must start at capacity")
    members = list(archive.members)
    inserted = archive.inserted
    attempted = 0
    diverged = 0

    for it in range(iterations):
        parent_idx = rng.integers(0, len(members), size=batch)
        mutants = [
            members[p].values + mutation_sigma * rng.standard_normal(members[p].values.shape[0])
            for p in parent_idx
        ]
        embeddings = evaluate(mutants)
        attempted += batch
        for values, emb in zip(mutants, embeddings):
            if emb is None:
                diverged += 1
                continue
            members.append(ArchiveMember(values, np.asarray(emb), inserted))
            inserted += 1
        if attempted >= 4 * batch and diverged / attempted > max_divergence_rate:
            raise DivergenceBudgetExceeded(diverged, attempted)

        excess = len(members) - archive.capacity
        if excess > 0:
            emb_matrix = np.stack([m.embedding for m in members])
            sims = emb_matrix @ emb_matrix.T
            ages = np.array([m.age for m in members])
            active = np.ones(len(members), dtype=bool)
            for _ in range(excess):
                victim = _remove_most_crowded(sims, active, ages)
                active[victim] = False
            members = [m for m, keep in zip(members, active) if keep]

        if on_iteration is not None:
            on_iteration(it, Archive(members, archive.capacity, inserted))

    return Archive(members, archive.capacity, inserted)
