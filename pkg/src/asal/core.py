"""Substrate-agnostic simulation contracts.

A substrate bundles an init distribution, a step rule and a renderer,
all parameterized by a flat genome vector. ``rollout`` composes them:
sample an initial state, advance it T steps, render frames at the
requested capture steps. The result is a pure function of
(genome, rollout spec).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .rng import make_rng


class SimulationDiverged(RuntimeError):
    """State left the finite domain during stepping."""

    def __init__(self, step_index: int, substrate: str = ""):
        self.step_index = step_index
        self.substrate = substrate
        super().__init__(
            f"simulation diverged at step {step_index}"
            + (f" ({substrate})" if substrate else "")
        )


@dataclass(frozen=True)
class Theta:
    """Flat genome identifying one simulation within a substrate."""

    values: np.ndarray
    substrate_id: str

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float64)
        )
        if self.values.ndim != 1:
            raise ValueError("genome must be a flat vector")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("genome contains non-finite values")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class RolloutSpec:
    """How long to simulate and which steps to render."""

    total_steps: int
    capture_steps: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        caps = tuple(int(c) for c in self.capture_steps)
        object.__setattr__(self, "capture_steps", caps)
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if not caps:
            raise ValueError("capture_steps must be non-empty")
        if any(b <= a for a, b in zip(caps, caps[1:])):
            raise ValueError("capture_steps must be strictly increasing")
        if caps[0] < 0 or caps[-1] > self.total_steps:
            raise ValueError("capture_steps must lie in [0, total_steps]")

    @staticmethod
    def subsampled(total_steps: int, n_captures: int, seed: int = 0) -> "RolloutSpec":
        """Evenly spaced captures ending at total_steps."""
        if n_captures < 1:
            raise ValueError("n_captures must be >= 1")
        n = min(n_captures, total_steps + 1)
        caps = np.unique(np.linspace(0, total_steps, n).round().astype(int))
        return RolloutSpec(total_steps, tuple(int(c) for c in caps), seed)


@dataclass(frozen=True)
class Frame:
    """Rendered RGB image of one state, values in [0, 1]."""

    pixels: np.ndarray
    step_index: int

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        object.__setattr__(self, "pixels", px)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError("pixels must be HxWx3")


@dataclass
class Trajectory:
    """Frames captured during one rollout, aligned with capture_steps."""

    frames: list[Frame]
    theta: Theta
    spec: RolloutSpec

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def final_frame(self) -> Frame:
        return self.frames[-1]


class Substrate:
    """Base class for simulation families.

    Subclasses define the genome layout, decode it once into step
    parameters, and provide init/step/render. All methods must be pure
    and deterministic so rollouts can run on any worker.
    """

    name: str = ""
    genome_dim: int = 0
    render_size: int = 224

    def default_genome(self) -> np.ndarray:
        """Center of the search distribution."""
        return np.zeros(self.genome_dim)

    def prepare(self, values: np.ndarray) -> Any:
        """Decode a raw genome into step-ready parameters."""
        raise NotImplementedError

    def init_state(self, params: Any, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def step(self, state: Any, params: Any) -> Any:
        raise NotImplementedError

    def render(self, state: Any, params: Any) -> np.ndarray:
        """Return an HxWx3 array with values in [0, 1]."""
        raise NotImplementedError

    def state_array(self, state: Any) -> np.ndarray:
        """Array inspected for divergence after each step."""
        return state

    def theta(self, values: np.ndarray | None = None) -> Theta:
        if values is None:
            values = self.default_genome()
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.genome_dim,):
            raise ValueError(
                f"{self.name} genome must have length {self.genome_dim}, "
                f"got {values.shape}"
            )
        return Theta(values, self.name)


# stream ids reserved within a rollout seed
_INIT_STREAM = 0


def rollout(substrate: Substrate, theta: Theta, spec: RolloutSpec) -> Trajectory:
    """Run one simulation and render frames at the capture steps.

    Deterministic in (theta, spec): the initial state is drawn from a
    counter-based generator keyed by spec.seed, and stepping is pure.
    Raises SimulationDiverged with the offending step index if the state
    leaves the finite domain.
    """
    if theta.substrate_id != substrate.name:
        raise ValueError(
            f"theta belongs to {theta.substrate_id!r}, not {substrate.name!r}"
        )
    if theta.dim != substrate.genome_dim:
        raise ValueError(
            f"genome length {theta.dim} != substrate dim {substrate.genome_dim}"
        )

    params = substrate.prepare(theta.values)
    state = substrate.init_state(params, make_rng(spec.seed, _INIT_STREAM))

    remaining = list(spec.capture_steps)
    frames: list[Frame] = []
    if remaining and remaining[0] == 0:
        frames.append(Frame(substrate.render(state, params), 0))
        remaining.pop(0)

    for t in range(1, spec.total_steps + 1):
        state = substrate.step(state, params)
        if not np.all(np.isfinite(substrate.state_array(state))):
            raise SimulationDiverged(t, substrate.name)
        if remaining and remaining[0] == t:
            frames.append(Frame(substrate.render(state, params), t))
            remaining.pop(0)
        if not remaining and t >= spec.capture_steps[-1]:
            break

    return Trajectory(frames, theta, spec)


def upsample_nearest(image: np.ndarray, size: int) -> np.ndarray:
    """Nearest-neighbor resample of an HxWxC array to size x size."""
    h, w = image.shape[:2]
    if h == size and w == size:
        return image.astype(np.float64, copy=False)
    rows = (np.arange(size) * h) // size
    cols = (np.arange(size) * w) // size
    return image[rows][:, cols].astype(np.float64, copy=False)
