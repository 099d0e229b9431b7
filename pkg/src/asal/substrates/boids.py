"""Flocking agents steered by a shared neural network.

Each boid observes its K nearest neighbors (toroidal metric) in its own
frame of reference. Neighbor features pass through a shared per-neighbor
encoder, are mean-pooled, and a head network emits a bounded turn rate.
Speed is constant, so the genome only shapes steering.

Network: encoder 4 -> 32 (tanh), head 32 -> 32 (tanh) -> 1, output
scaled to [-tau_max, tau_max] by tanh. Feature vector per neighbor is
(dx, dy, cos dtheta, sin dtheta) with the displacement in the local
frame scaled by POS_SCALE. These widths and scales are run-config
constants, not searched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from ..core import Substrate

ENCODER_WIDTH = 32
HEAD_WIDTH = 32
FEATURE_DIM = 4
POS_SCALE = 10.0
TAU_MAX = 0.3
SPEED_PER_STEP = 0.001  # world units per step; 1000 steps span the torus

GENOME_DIM = (
    FEATURE_DIM * ENCODER_WIDTH + ENCODER_WIDTH
    + ENCODER_WIDTH * HEAD_WIDTH + HEAD_WIDTH
    + HEAD_WIDTH * 1 + 1
)


@dataclass
class BoidsParams:
    w_enc: np.ndarray
    b_enc: np.ndarray
    w_hidden: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray


@dataclass
class BoidsState:
    positions: np.ndarray  # (N, 2) in [0, 1)
    headings: np.ndarray  # (N,) radians


def unpack_weights(values: np.ndarray) -> BoidsParams:
    if values.shape != (GENOME_DIM,):
        raise ValueError(f"boids genome must have length {GENOME_DIM}")
    parts = np.split(
        values,
        np.cumsum(
            [
                FEATURE_DIM * ENCODER_WIDTH,
                ENCODER_WIDTH,
                ENCODER_WIDTH * HEAD_WIDTH,
                HEAD_WIDTH,
                HEAD_WIDTH,
            ]
        ),
    )
    return BoidsParams(
        w_enc=parts[0].reshape(FEATURE_DIM, ENCODER_WIDTH),
        b_enc=parts[1],
        w_hidden=parts[2].reshape(ENCODER_WIDTH, HEAD_WIDTH),
        b_hidden=parts[3],
        w_out=parts[4].reshape(HEAD_WIDTH, 1),
        b_out=parts[5],
    )


def boids_init(rng: np.random.Generator, n_boids: int = 128) -> BoidsState:
    positions = rng.random((n_boids, 2))
    headings = rng.uniform(0.0, 2.0 * np.pi, n_boids)
    return BoidsState(positions, headings)


def boids_step(
    state: BoidsState, params: BoidsParams, k_neighbors: int = 16
) -> BoidsState:
    """Advance every boid one step.

    Turn rates are computed from the current state for all boids before
    any position moves, so the update is synchronous and order-free.
    """
    pos, heading = state.positions, state.headings
    n = pos.shape[0]
    k = min(k_neighbors, n - 1)

    diff = pos[None, :, :] - pos[:, None, :]
    diff -= np.round(diff)  # toroidal displacement in [-0.5, 0.5]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)

    rows = np.arange(n)[:, None]
    nearest = np.argpartition(d2, k - 1, axis=1)[:, :k]
    order = np.argsort(d2[rows, nearest], axis=1, kind="stable")
    nearest = nearest[rows, order]

    rel = diff[rows, nearest]  # (N, K, 2)
    c = np.cos(heading)[:, None]
    s = np.sin(heading)[:, None]
    local_x = rel[:, :, 0] * c + rel[:, :, 1] * s
    local_y = -rel[:, :, 0] * s + rel[:, :, 1] * c
    dtheta = heading[nearest] - heading[:, None]

    feats = np.stack(
        [local_x * POS_SCALE, local_y * POS_SCALE, np.cos(dtheta), np.sin(dtheta)],
        axis=-1,
    )
    enc = np.tanh(feats @ params.w_enc + params.b_enc)
    pooled = enc.mean(axis=1)
    hidden = np.tanh(pooled @ params.w_hidden + params.b_hidden)
    turn = TAU_MAX * np.tanh(hidden @ params.w_out + params.b_out)[:, 0]

    new_heading = np.mod(heading + turn, 2.0 * np.pi)
    step_vec = SPEED_PER_STEP * np.stack(
        [np.cos(new_heading), np.sin(new_heading)], axis=-1
    )
    new_pos = np.mod(pos + step_vec, 1.0)
    return BoidsState(new_pos, new_heading)


def boids_render(state: BoidsState, render_size: int = 224) -> np.ndarray:
    """White oriented triangles on black."""
    img = Image.new("L", (render_size, render_size), 0)
    draw = ImageDraw.Draw(img)
    length = max(render_size / 64.0, 2.0)
    width = length * 0.6
    for (x, y), theta in zip(state.positions, state.headings):
        cx, cy = x * render_size, y * render_size
        dx, dy = np.cos(theta), np.sin(theta)
        px, py = -dy, dx
        tip = (cx + dx * length, cy + dy * length)
        left = (cx - dx * length / 2 + px * width / 2, cy - dy * length / 2 + py * width / 2)
        right = (cx - dx * length / 2 - px * width / 2, cy - dy * length / 2 - py * width / 2)
        draw.polygon([tip, left, right], fill=255)
    gray = np.asarray(img, dtype=np.float64) / 255.0
    return np.repeat(gray[:, :, None], 3, axis=2)


class Boids(Substrate):
    name = "boids"
    genome_dim = GENOME_DIM

    def __init__(
        self, n_boids: int = 128, k_neighbors: int = 16, render_size: int = 224
    ):
        self.n_boids = n_boids
        self.k_neighbors = k_neighbors
        self.render_size = render_size

    def prepare(self, values: np.ndarray) -> BoidsParams:
        return unpack_weights(values)

    def init_state(self, params: BoidsParams, rng) -> BoidsState:
        return boids_init(rng, self.n_boids)

    def step(self, state: BoidsState, params: BoidsParams) -> BoidsState:
        return boids_step(state, params, self.k_neighbors)

    def render(self, state: BoidsState, params: BoidsParams) -> np.ndarray:
        return boids_render(state, self.render_size)

    def state_array(self, state: BoidsState) -> np.ndarray:
        return state.positions
