"""Glue between rollouts and embeddings used by every search mode."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RolloutSpec, SimulationDiverged, Substrate, Trajectory, rollout
from .embedding import Embedder


@dataclass
class ScoredTrajectory:
    trajectory: Trajectory
    embeddings: np.ndarray  # (n_captures, D), row per captured frame
    scores: dict[str, float]


class RolloutEvaluator:
    """Rolls out genomes under a fixed spec and embeds the frames.

    One evaluator pins (substrate, rollout spec, embedder), so fitness
    is a stationary function of the genome.
    """

    def __init__(self, substrate: Substrate, spec: RolloutSpec, embedder: Embedder):
        self.substrate = substrate
        self.spec = spec
        self.embedder = embedder

    def trajectory(self, values: np.ndarray) -> Trajectory:
        return rollout(self.substrate, self.substrate.theta(values), self.spec)

    def trajectory_embeddings(self, values: np.ndarray) -> np.ndarray:
        traj = self.trajectory(values)
        return self.embedder.embed_images(traj.frames)

    def final_embedding(self, values: np.ndarray) -> np.ndarray:
        traj = self.trajectory(values)
        return self.embedder.embed_image(traj.final_frame)

    def final_embedding_or_none(self, values: np.ndarray) -> np.ndarray | None:
        """Diverged rollouts report None instead of raising."""
        try:
            return self.final_embedding(values)
        except SimulationDiverged:
            return None

    def scored(self, values: np.ndarray, scores: dict[str, float] | None = None) -> ScoredTrajectory:
        traj = self.trajectory(values)
        emb = self.embedder.embed_images(traj.frames)
        return ScoredTrajectory(traj, emb, scores or {})
