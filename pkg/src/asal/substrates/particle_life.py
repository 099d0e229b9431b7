"""Typed particles with an asymmetric attraction matrix.

N particles of K=6 types move on the unit torus. Each ordered type pair
has an attraction coefficient in [-1, 1]; each type has a repulsion
radius beta in (0, 1) (as a fraction of the interaction cutoff). The
force on a particle is the sum over neighbors within the cutoff of a
piecewise-linear profile along the separation vector, integrated with
damped semi-implicit Euler.

The genome packs 36 raw attraction values (tanh-squashed) followed by
6 raw beta values (sigmoid-squashed), 42 in total.

Two step paths exist: a cell-list pass (default) and a naive all-pairs
pass. Both enumerate contributing pairs in (i, j) order and accumulate
with np.add.at, so they agree exactly; pairs beyond the cutoff
contribute an exact zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Substrate

K_TYPES = 6
GENOME_DIM = K_TYPES * K_TYPES + K_TYPES

R_MAX = 0.1  # interaction cutoff, world units
DT = 0.02
DAMPING = 0.9  # velocity multiplier per step
FORCE_SCALE = 1.0

# fixed 6-type palette
_PALETTE = np.array(
    [
        [0.90, 0.10, 0.10],
        [0.10, 0.80, 0.10],
        [0.15, 0.35, 0.95],
        [0.95, 0.85, 0.10],
        [0.80, 0.15, 0.85],
        [0.10, 0.85, 0.85],
    ]
)


@dataclass
class ParticleLifeGenome:
    attraction: np.ndarray  # (6, 6) in [-1, 1]
    beta: np.ndarray  # (6,) in (0, 1)


@dataclass
class ParticleLifeState:
    positions: np.ndarray  # (N, 2) in [0, 1)
    velocities: np.ndarray  # (N, 2)
    types: np.ndarray  # (N,) ints in [0, 6)


def decode_genome(values: np.ndarray) -> ParticleLifeGenome:
    if values.shape != (GENOME_DIM,):
        raise ValueError(f"particle life genome must have length {GENOME_DIM}")
    attraction = np.tanh(values[: K_TYPES * K_TYPES]).reshape(K_TYPES, K_TYPES)
    beta = 1.0 / (1.0 + np.exp(-values[K_TYPES * K_TYPES :]))
    return ParticleLifeGenome(attraction, beta)


def plife_init(rng: np.random.Generator, n_particles: int = 5000) -> ParticleLifeState:
    """Uniform positions, zero velocities, types assigned round-robin."""
    positions = rng.random((n_particles, 2))
    velocities = np.zeros((n_particles, 2))
    types = np.arange(n_particles, dtype=np.int64) % K_TYPES
    return ParticleLifeState(positions, velocities, types)


def plife_force(r: np.ndarray, a: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Force profile over normalized distance r (cutoff at 1).

    r < beta: linear repulsion from -1 at contact to 0 at beta.
    beta <= r < 1: triangular bump peaking at `a` at the midpoint.
    r >= 1: zero.
    """
    r = np.asarray(r, dtype=np.float64)
    repulse = r / beta - 1.0
    bump = a * (1.0 - np.abs(2.0 * r - 1.0 - beta) / (1.0 - beta))
    return np.where(r < beta, repulse, np.where(r < 1.0, bump, 0.0))


def _pair_accelerations(
    positions: np.ndarray,
    types: np.ndarray,
    genome: ParticleLifeGenome,
    idx_i: np.ndarray,
    idx_j: np.ndarray,
) -> np.ndarray:
    """Accumulate per-pair forces onto particles, in (i, j) list order."""
    diff = positions[idx_j] - positions[idx_i]
    diff -= np.round(diff)
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    a = genome.attraction[types[idx_i], types[idx_j]]
    beta = genome.beta[types[idx_i]]
    force = plife_force(dist / R_MAX, a, beta)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = diff / dist[:, None]
    contrib = np.where(
        (dist > 1e-12)[:, None], FORCE_SCALE * force[:, None] * unit, 0.0
    )
    acc = np.zeros_like(positions)
    np.add.at(acc, idx_i, contrib)
    return acc


def _all_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    idx_i, idx_j = np.nonzero(~np.eye(n, dtype=bool))
    return idx_i, idx_j


def _cell_list_pairs(positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Candidate pairs from the 3x3 cell neighborhood, sorted by (i, j)."""
    n = positions.shape[0]
    n_cells = int(1.0 / R_MAX)
    if n_cells < 3:
        return _all_pairs(n)
    cell_xy = np.minimum((positions * n_cells).astype(np.int64), n_cells - 1)
    cell_id = cell_xy[:, 0] * n_cells + cell_xy[:, 1]
    order = np.argsort(cell_id, kind="stable")
    sorted_ids = cell_id[order]

    pair_i: list[np.ndarray] = []
    pair_j: list[np.ndarray] = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            ncell = (
                np.mod(cell_xy[:, 0] + dx, n_cells) * n_cells
                + np.mod(cell_xy[:, 1] + dy, n_cells)
            )
            starts = np.searchsorted(sorted_ids, ncell, side="left")
            ends = np.searchsorted(sorted_ids, ncell, side="right")
            counts = ends - starts
            if counts.sum() == 0:
                continue
            i_rep = np.repeat(np.arange(n), counts)
            spans = np.concatenate(
                [np.arange(s, e) for s, e in zip(starts, ends) if e > s]
            )
            pair_i.append(i_rep)
            pair_j.append(order[spans])
    idx_i = np.concatenate(pair_i)
    idx_j = np.concatenate(pair_j)
    keep = idx_i != idx_j
    idx_i, idx_j = idx_i[keep], idx_j[keep]
    lex = np.lexsort((idx_j, idx_i))
    return idx_i[lex], idx_j[lex]


def plife_step(
    state: ParticleLifeState,
    genome: ParticleLifeGenome,
    use_cell_list: bool = True,
) -> ParticleLifeState:
    """Damped semi-implicit Euler step with toroidal wrapping."""
    if use_cell_list:
        idx_i, idx_j = _cell_list_pairs(state.positions)
    else:
        idx_i, idx_j = _all_pairs(state.positions.shape[0])
    acc = _pair_accelerations(state.positions, state.types, genome, idx_i, idx_j)
    velocities = DAMPING * state.velocities + DT * acc
    positions = np.mod(state.positions + DT * velocities, 1.0)
    return ParticleLifeState(positions, velocities, state.types)


def plife_render(state: ParticleLifeState, render_size: int = 224) -> np.ndarray:
    """Type-colored discs on black."""
    img = np.zeros((render_size, render_size, 3))
    radius = max(render_size // 128, 1)
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    disc = dy * dy + dx * dx <= radius * radius
    offs_r = dy[disc]
    offs_c = dx[disc]
    cols = np.minimum((state.positions[:, 0] * render_size).astype(int), render_size - 1)
    rows = np.minimum((state.positions[:, 1] * render_size).astype(int), render_size - 1)
    for r, c, t in zip(rows, cols, state.types):
        rr = np.mod(r + offs_r, render_size)
        cc = np.mod(c + offs_c, render_size)
        img[rr, cc] = _PALETTE[t]
    return img


class ParticleLife(Substrate):
    name = "particle_life"
    genome_dim = GENOME_DIM

    def __init__(self, n_particles: int = 5000, render_size: int = 224):
        self.n_particles = n_particles
        self.render_size = render_size

    def prepare(self, values: np.ndarray) -> ParticleLifeGenome:
        return decode_genome(values)

    def init_state(self, params: ParticleLifeGenome, rng) -> ParticleLifeState:
        return plife_init(rng, self.n_particles)

    def step(self, state: ParticleLifeState, params: ParticleLifeGenome) -> ParticleLifeState:
        return plife_step(state, params)

    def render(self, state: ParticleLifeState, params: ParticleLifeGenome) -> np.ndarray:
        return plife_render(state, self.render_size)

    def state_array(self, state: ParticleLifeState) -> np.ndarray:
        return state.positions
