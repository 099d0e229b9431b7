import numpy as np
import pytest

from asal.rng import make_rng
from asal.search.diversity_ga import (
    Archive,
    ArchiveMember,
    DivergenceBudgetExceeded,
    ga_illuminate,
)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _archive(embeddings, capacity=None):
    members = [
        ArchiveMember(np.array([float(i)]), np.asarray(e), i)
        for i, e in enumerate(embeddings)
    ]
    return Archive(members, capacity or len(members))


class GenomeEmbedder:
    """Deterministic toy evaluator: genome angle -> 2-D unit vector."""

    def __call__(self, batch):
        return [unit([np.cos(v[0]), np.sin(v[0])]) for v in batch]


def test_duplicate_removed_first():
    e = unit([1.0, 0.0])
    f = unit([0.0, 1.0])
    archive = _archive([e, e, f], capacity=2)

    # no mutations: batch=0 equivalent via sigma=0 and evaluating copies
    def evaluate(batch):
        return [unit([1.0, 1.0]) for _ in batch]

    out = ga_illuminate(archive, evaluate, make_rng(0, 0), iterations=1, batch=1,
                        mutation_sigma=0.0)
    assert len(out.members) == 2
    embs = out.embeddings
    # one of the two duplicates is gone; the orthogonal member survives
    assert any(np.allclose(row, f) for row in embs)
    dup_count = sum(bool(np.allclose(row, e)) for row in embs)
    assert dup_count == 1


def test_sigma_zero_keeps_embedding_multiset():
    rng = np.random.default_rng(3)
    base = [unit(rng.standard_normal(4)) for _ in range(6)]
    archive = _archive(base)

    values_seen = []

    def evaluate(batch):
        values_seen.extend(batch)
        # genome i maps back to its own embedding
        return [base[int(v[0])] for v in batch]

    out = ga_illuminate(archive, evaluate, make_rng(1, 0), iterations=3, batch=4,
                        mutation_sigma=0.0)
    assert len(out.members) == 6
    before = sorted(tuple(np.round(e, 9)) for e in base)
    after = sorted(tuple(np.round(m.embedding, 9)) for m in out.members)
    assert before == after


def test_capacity_bounds_hold():
    rng = np.random.default_rng(5)
    base = [unit(rng.standard_normal(3)) for _ in range(10)]
    archive = _archive(base)
    sizes = []

    def evaluate(batch):
        return [unit(rng.standard_normal(3)) for _ in batch]

    def on_iteration(it, arch):
        sizes.append(len(arch.members))

    out = ga_illuminate(archive, evaluate, make_rng(2, 0), iterations=20, batch=32,
                        mutation_sigma=0.5, on_iteration=on_iteration)
    assert len(out.members) == 10
    assert all(s == 10 for s in sizes)


def test_diverged_mutants_are_dropped_but_counted():
    base = [unit([1, 0]), unit([0, 1]), unit([1, 1])]
    archive = _archive(base)

    def evaluate(batch):
        return [None for _ in batch]  # every mutant diverges

    with pytest.raises(DivergenceBudgetExceeded):
        ga_illuminate(archive, evaluate, make_rng(3, 0), iterations=10, batch=8,
                      mutation_sigma=0.1)


def test_partial_divergence_tolerated():
    rng = np.random.default_rng(7)
    base = [unit(rng.standard_normal(3)) for _ in range(5)]
    archive = _archive(base)
    calls = {"n": 0}

    def evaluate(batch):
        out = []
        for _ in batch:
            calls["n"] += 1
            out.append(None if calls["n"] % 4 == 0 else unit(rng.standard_normal(3)))
        return out

    out = ga_illuminate(archive, evaluate, make_rng(4, 0), iterations=10, batch=8,
                        mutation_sigma=0.2)
    assert len(out.members) == 5


def test_diversity_improves_on_angle_toy():
    """Crowded angles spread out: the GA minimizes nearest-neighbor
    similarity on a ring."""
    rng = np.random.default_rng(0)
    angles = rng.uniform(0, 0.3, 16)  # tight cluster
    members = [
        ArchiveMember(np.array([a]), unit([np.cos(a), np.sin(a)]), i)
        for i, a in enumerate(angles)
    ]
    archive = Archive(members, 16)
    before = archive.diversity()
    out = ga_illuminate(archive, GenomeEmbedder(), make_rng(5, 0), iterations=200,
                        batch=8, mutation_sigma=0.4)
    assert out.diversity() < before
