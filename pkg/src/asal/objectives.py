"""The three search scores, all computed on unit-norm embeddings.

target_score: mean alignment between captured frames and their scheduled
prompts (maximize). open_endedness_score: mean over time of each frame's
best similarity to its own history (minimize for sustained novelty).
diversity_score: mean nearest-neighbor similarity across a set of
simulations (minimize for diverse sets).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PromptSchedule:
    """Prompts pinned to capture steps: ((step, prompt), ...)."""

    entries: tuple[tuple[int, str], ...]

    def __post_init__(self):
        entries = tuple((int(s), str(p)) for s, p in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("schedule needs at least one entry")

    @staticmethod
    def single(prompt: str, step: int) -> "PromptSchedule":
        return PromptSchedule(((step, prompt),))

    @staticmethod
    def evenly_spaced(prompts: list[str], capture_steps: tuple[int, ...]) -> "PromptSchedule":
        """Spread prompts over the capture steps, last prompt at the end."""
        if not prompts:
            raise ValueError("need at least one prompt")
        idx = np.linspace(0, len(capture_steps) - 1, len(prompts) + 1)[1:]
        steps = [capture_steps[int(round(i))] for i in idx]
        return PromptSchedule(tuple(zip(steps, prompts)))

    @property
    def prompts(self) -> list[str]:
        return [p for _, p in self.entries]


def target_score(
    traj_embeddings: np.ndarray,
    capture_steps: tuple[int, ...],
    schedule: PromptSchedule,
    text_embeddings: dict[str, np.ndarray],
) -> float:
    """Mean over schedule entries of <frame embedding, prompt embedding>."""
    traj_embeddings = np.asarray(traj_embeddings)
    step_to_row = {s: i for i, s in enumerate(capture_steps)}
    total = 0.0
    for step, prompt in schedule.entries:
        if step not in step_to_row:
            raise ValueError(f"schedule step {step} not among capture steps")
        total += float(traj_embeddings[step_to_row[step]] @ text_embeddings[prompt])
    return total / len(schedule.entries)


def open_endedness_score(traj_embeddings: np.ndarray) -> float:
    """Mean over frames (after the first) of the max similarity to any
    earlier frame. 1 means the rollout revisits itself; lower is more
    novel. The first frame has no history and is excluded."""
    e = np.asarray(traj_embeddings)
    if e.ndim != 2 or e.shape[0] < 2:
        raise ValueError("need at least 2 captured embeddings")
    sims = e @ e.T
    best_past = [sims[t, :t].max() for t in range(1, e.shape[0])]
    return float(np.mean(best_past))


def diversity_score(final_embeddings: np.ndarray) -> float:
    """Mean over set members of the similarity to their nearest other
    member; lower means a more spread-out set."""
    e = np.asarray(final_embeddings)
    if e.ndim != 2 or e.shape[0] < 2:
        raise ValueError("need at least 2 embeddings")
    sims = e @ e.T
    np.fill_diagonal(sims, -np.inf)
    return float(sims.max(axis=1).mean())
