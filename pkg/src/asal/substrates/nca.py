"""Neural cellular automaton with learned perception filters.

Every cell holds C=16 channels. Perception applies F=4 learned 3x3
filters depthwise (shared across channels, toroidal boundary), giving
C*F features per cell. A shared two-layer MLP maps features to per-cell
channel deltas; the state is clamped to [-1, 1] after each step.
Channels 0..2 are the RGB readout.

Genome layout (2644 values): 4x3x3 filter taps, then the MLP weights
(64 -> 32 tanh -> 16).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Substrate, upsample_nearest

N_CHANNELS = 16
N_FILTERS = 4
HIDDEN = 32
FEATURES = N_CHANNELS * N_FILTERS
DT = 1.0

GENOME_DIM = (
    N_FILTERS * 9 + FEATURES * HIDDEN + HIDDEN + HIDDEN * N_CHANNELS + N_CHANNELS
)

_OFFSETS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]


@dataclass
class NcaParams:
    filters: np.ndarray  # (4, 9) taps over the 3x3 neighborhood
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass
class NcaState:
    grid: np.ndarray  # (G, G, C) in [-1, 1]


def unpack_weights(values: np.ndarray) -> NcaParams:
    if values.shape != (GENOME_DIM,):
        raise ValueError(f"nca genome must have length {GENOME_DIM}")
    parts = np.split(
        values,
        np.cumsum([N_FILTERS * 9, FEATURES * HIDDEN, HIDDEN, HIDDEN * N_CHANNELS]),
    )
    return NcaParams(
        filters=parts[0].reshape(N_FILTERS, 9),
        w1=parts[1].reshape(FEATURES, HIDDEN),
        b1=parts[2],
        w2=parts[3].reshape(HIDDEN, N_CHANNELS),
        b2=parts[4],
    )


def nca_init(
    rng: np.random.Generator,
    grid_size: int = 64,
    radius_range: tuple[float, float] | None = None,
) -> NcaState:
    """All channels 1 inside a random disc, 0 elsewhere.

    Radius is uniform in [G/16, G/4] by default and the center is drawn
    so the disc lies fully inside the grid.
    """
    if radius_range is None:
        radius_range = (grid_size / 16.0, grid_size / 4.0)
    radius = rng.uniform(*radius_range)
    # half-cell margin keeps every covered cell off the border
    cx = rng.uniform(radius + 0.5, grid_size - radius - 0.5)
    cy = rng.uniform(radius + 0.5, grid_size - radius - 0.5)
    yy, xx = np.mgrid[0:grid_size, 0:grid_size]
    inside = (yy + 0.5 - cy) ** 2 + (xx + 0.5 - cx) ** 2 <= radius**2
    grid = np.zeros((grid_size, grid_size, N_CHANNELS))
    grid[inside] = 1.0
    # the cell containing the center is always seeded, even at radius 0
    grid[min(int(cy), grid_size - 1), min(int(cx), grid_size - 1)] = 1.0
    return NcaState(grid)


def nca_step(state: NcaState, params: NcaParams) -> NcaState:
    grid = state.grid
    rolled = np.stack(
        [np.roll(grid, (di, dj), axis=(0, 1)) for di, dj in _OFFSETS], axis=0
    )
    # (G, G, C, F): each filter's taps weight the 9 shifted copies
    perception = np.einsum("oghc,fo->ghcf", rolled, params.filters)
    feats = perception.reshape(*grid.shape[:2], FEATURES)
    hidden = np.tanh(feats @ params.w1 + params.b1)
    delta = hidden @ params.w2 + params.b2
    return NcaState(np.clip(grid + DT * delta, -1.0, 1.0))


def nca_render(state: NcaState, render_size: int = 224) -> np.ndarray:
    rgb = (state.grid[:, :, :3] + 1.0) / 2.0
    return upsample_nearest(rgb, render_size)


class NeuralCA(Substrate):
    name = "nca"
    genome_dim = GENOME_DIM

    def __init__(self, grid_size: int = 64, render_size: int = 224):
        self.grid_size = grid_size
        self.render_size = render_size

    def prepare(self, values: np.ndarray) -> NcaParams:
        return unpack_weights(values)

    def init_state(self, params: NcaParams, rng) -> NcaState:
        return nca_init(rng, self.grid_size)

    def step(self, state: NcaState, params: NcaParams) -> NcaState:
        return nca_step(state, params)

    def render(self, state: NcaState, params: NcaParams) -> np.ndarray:
        return nca_render(state, self.render_size)

    def state_array(self, state: NcaState) -> np.ndarray:
        return state.grid
