"""Simulation substrates, addressable by name."""

from __future__ import annotations

from typing import Any

from .lifelike import LifelikeCA
from .lenia import Lenia
from .boids import Boids
from .particle_life import ParticleLife
from .nca import NeuralCA

_SUBSTRATES = {
    "lifelike_ca": LifelikeCA,
    "lenia": Lenia,
    "boids": Boids,
    "particle_life": ParticleLife,
    "nca": NeuralCA,
}


def substrate_names() -> list[str]:
    return sorted(_SUBSTRATES)


def get_substrate(name: str, **overrides: Any):
    """Instantiate a substrate by name with optional constant overrides."""
    try:
        cls = _SUBSTRATES[name]
    except KeyError:
        raise ValueError(
            f"unknown substrate {name!r}; choose from {substrate_names()}"
        ) from None
    return cls(**overrides)
