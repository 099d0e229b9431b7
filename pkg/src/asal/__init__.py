"""Search engine for artificial-life simulations.

Substrates turn flat genomes into rollouts; embedders turn rendered
frames (and prompts) into unit vectors; objectives score trajectories
and sets in that space; optimizers search the genome space against
those scores.
"""

from .core import (
    Frame,
    RolloutSpec,
    SimulationDiverged,
    Substrate,
    Theta,
    Trajectory,
    rollout,
)
from .rng import make_rng
from .embedding import make_embedder, similarity
from .objectives import (
    PromptSchedule,
    diversity_score,
    open_endedness_score,
    target_score,
)
from .pipeline import RolloutEvaluator
from .substrates import get_substrate, substrate_names

__version__ = "0.1.0"

__all__ = [
    "Frame",
    "RolloutSpec",
    "SimulationDiverged",
    "Substrate",
    "Theta",
    "Trajectory",
    "rollout",
    "make_rng",
    "make_embedder",
    "similarity",
    "PromptSchedule",
    "diversity_score",
    "open_endedness_score",
    "target_score",
    "RolloutEvaluator",
    "get_substrate",
    "substrate_names",
    "__version__",
]
