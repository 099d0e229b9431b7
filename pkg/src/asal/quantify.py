"""Quantitative analyses over embeddings of rolled-out simulations:
interpolation curves, per-parameter importance, population sweeps, and
embedding-speed plateau detection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding import similarity
from .pipeline import RolloutEvaluator

DEFAULT_DELTAS = tuple(s * k * 0.05 for k in (3, 2, 1) for s in (-1,)) + tuple(
    k * 0.05 for k in (1, 2, 3)
)


@dataclass
class SweepReport:
    axis: np.ndarray
    scores: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=np.float64)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.axis.shape != self.scores.shape:
            raise ValueError("axis and scores must align")
        if np.any(np.diff(self.axis) < 0):
            raise ValueError("axis must be monotone non-decreasing")


def interpolate_curve(
    evaluator: RolloutEvaluator,
    theta_a: np.ndarray,
    theta_b: np.ndarray,
    n_points: int,
    reference: str = "a",
) -> SweepReport:
    """Similarity of final states along the straight line between two
    genomes, measured against one endpoint's final state."""
    theta_a = np.asarray(theta_a, dtype=np.float64)
    theta_b = np.asarray(theta_b, dtype=np.float64)
    if theta_a.shape != theta_b.shape:
        raise ValueError("endpoint genomes differ in dimension")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if reference not in ("a", "b"):
        raise ValueError("reference must be 'a' or 'b'")

    ref_emb = evaluator.final_embedding(theta_a if reference == "a" else theta_b)
    alphas = np.linspace(0.0, 1.0, n_points)
    scores = []
    for alpha in alphas:
        blended = (1.0 - alpha) * theta_a + alpha * theta_b
        scores.append(similarity(evaluator.final_embedding(blended), ref_emb))
    return SweepReport(alphas, np.array(scores), {"reference": reference})


def param_importance(
    evaluator: RolloutEvaluator,
    theta: np.ndarray,
    target_embedding: np.ndarray,
    deltas: tuple[float, ...] = DEFAULT_DELTAS,
    dims: list[int] | None = None,
) -> list[tuple[int, float]]:
    """Sweep each genome dimension over theta + delta (others held fixed)
    and rank dimensions by the standard deviation of the alignment score.

    Returns (dim index, std) pairs sorted by std descending, index
    ascending on ties.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if dims is None:
        dims = list(range(theta.shape[0]))
    results = []
    for dim in dims:
        scores = []
        for delta in deltas:
            probe = theta.copy()
            probe[dim] += delta
            scores.append(similarity(evaluator.final_embedding(probe), target_embedding))
        results.append((dim, float(np.std(scores))))
    results.sort(key=lambda t: (-t[1], t[0]))
    return results


def sweep_population(
    make_evaluator,
    counts: list[int],
    theta: np.ndarray,
    target_embedding: np.ndarray,
) -> SweepReport:
    """Alignment score as the substrate's population size grows.

    make_evaluator(count) must return a RolloutEvaluator whose substrate
    was rebuilt with that population size.
    """
    counts = sorted(counts)
    scores = []
    for count in counts:
        ev = make_evaluator(count)
        scores.append(similarity(ev.final_embedding(theta), target_embedding))
    return SweepReport(np.array(counts, dtype=np.float64), np.array(scores))


def embedding_speed(
    traj_embeddings: np.ndarray, capture_steps: tuple[int, ...]
) -> np.ndarray:
    """Norm of the embedding change per simulation step, one value per
    consecutive capture pair."""
    e = np.asarray(traj_embeddings)
    steps = np.asarray(capture_steps, dtype=np.float64)
    if e.shape[0] != steps.shape[0]:
        raise ValueError("embeddings and capture steps must align")
    if e.shape[0] < 2:
        raise ValueError("need at least 2 captures")
    diffs = np.linalg.norm(np.diff(e, axis=0), axis=1)
    return diffs / np.diff(steps)


def detect_plateau(
    speeds: np.ndarray, window: int, epsilon: float
) -> int | None:
    """First index whose trailing-window mean speed drops below epsilon.

    Indices before a full window use the speeds available so far. None
    if the signal never settles.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    speeds = np.asarray(speeds, dtype=np.float64)
    for k in range(speeds.shape[0]):
        lo = max(0, k - window + 1)
        if speeds[lo : k + 1].mean() < epsilon:
            return k
    return None
