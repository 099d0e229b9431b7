"""Continuous multi-channel cellular automaton with a searchable genome.

The genome splits into 45 dynamics values plus a 32x32x3 initial patch
(3117 total). The dynamics block decodes into 5 convolution kernels of
9 parameters each (5 x 9 = 45):

    index within kernel   parameter           squashed range
    0                     radius (grid frac)  [0.04, 0.25]
    1..3                  ring weights b0..b2 [0.0, 1.0]
    4                     growth center mu    [0.05, 0.50]
    5                     growth width sigma  [0.01, 0.18]
    6                     kernel weight h     [0.01, 1.00]
    7                     source channel      {0, 1, 2}
    8                     target channel      {0, 1, 2}

Raw values are squashed by a sigmoid into the ranges above (channels by
binning the squashed value), so decoding is monotone and any real vector
is a valid genome. The step timescale dt is a substrate constant.

Each kernel is a ring profile (3 concentric Gaussian shells) normalized
to unit mass; activation u is the circular convolution of the source
channel, growth is g(u) = 2*exp(-(u-mu)^2 / (2*sigma^2)) - 1, and the
weighted growths accumulate into target channels. The state is clamped
to [0, 1] after every step, so divergence cannot occur by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..core import Substrate, upsample_nearest

DYNAMICS_DIM = 45
PATCH_SHAPE = (32, 32, 3)
PATCH_DIM = 32 * 32 * 3
GENOME_DIM = DYNAMICS_DIM + PATCH_DIM

N_KERNELS = 5
PARAMS_PER_KERNEL = 9

_RING_CENTERS = (np.arange(3) + 0.5) / 3
_RING_WIDTH = 1.0 / 6.0


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _squash(raw: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return lo + (hi - lo) * _sigmoid(raw)


def _channel_bin(squashed01: np.ndarray) -> np.ndarray:
    return np.minimum(2, np.floor(squashed01 * 3.0)).astype(int)


@dataclass
class KernelSpec:
    radius_frac: float
    ring_weights: np.ndarray
    mu: float
    sigma: float
    weight: float
    src: int
    dst: int


@dataclass
class KernelGrowthParams:
    """Decoded dynamics: kernel FFTs plus growth curves, ready to step."""

    kernels: list[KernelSpec]
    kernel_ffts: list[np.ndarray]
    dt: float
    grid_size: int
    init_patch: np.ndarray


@dataclass
class LeniaState:
    grid: np.ndarray  # G x G x 3 in [0, 1]


def decode_dynamics(dynamics: np.ndarray) -> list[KernelSpec]:
    """Squash the 45 raw dynamics values into kernel/growth parameters."""
    dynamics = np.asarray(dynamics, dtype=np.float64)
    if dynamics.shape != (DYNAMICS_DIM,):
        raise ValueError(f"dynamics must have length {DYNAMICS_DIM}")
    specs = []
    for k in range(N_KERNELS):
        p = dynamics[k * PARAMS_PER_KERNEL : (k + 1) * PARAMS_PER_KERNEL]
        specs.append(
            KernelSpec(
                radius_frac=float(_squash(p[0:1], 0.04, 0.25)[0]),
                ring_weights=_squash(p[1:4], 0.0, 1.0),
                mu=float(_squash(p[4:5], 0.05, 0.50)[0]),
                sigma=float(_squash(p[5:6], 0.01, 0.18)[0]),
                weight=float(_squash(p[6:7], 0.01, 1.0)[0]),
                src=int(_channel_bin(_sigmoid(p[7:8]))[0]),
                dst=int(_channel_bin(_sigmoid(p[8:9]))[0]),
            )
        )
    return specs


def build_kernel(spec: KernelSpec, grid_size: int) -> np.ndarray:
    """Ring-shaped kernel laid out for FFT (center at the origin corner)."""
    idx = np.arange(grid_size)
    wrapped = np.minimum(idx, grid_size - idx).astype(np.float64)
    dist = np.sqrt(wrapped[:, None] ** 2 + wrapped[None, :] ** 2)
    radius = max(spec.radius_frac * grid_size, 1.0)
    rho = dist / radius
    profile = np.zeros_like(rho)
    for b, c in zip(spec.ring_weights, _RING_CENTERS):
        profile += b * np.exp(-((rho - c) ** 2) / (2 * _RING_WIDTH**2))
    profile[rho > 1.0] = 0.0
    total = profile.sum()
    if total > 1e-12:
        profile /= total
    return profile


def growth(u: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    return 2.0 * np.exp(-((u - mu) ** 2) / (2.0 * sigma**2)) - 1.0


def lenia_init(params: KernelGrowthParams) -> LeniaState:
    """Zero grid with the init patch pasted centered."""
    g = params.grid_size
    grid = np.zeros((g, g, 3), dtype=np.float64)
    ph, pw, _ = params.init_patch.shape
    if ph > g or pw > g:
        raise ValueError("init patch larger than grid")
    r0 = (g - ph) // 2
    c0 = (g - pw) // 2
    grid[r0 : r0 + ph, c0 : c0 + pw, :] = params.init_patch
    return LeniaState(grid)


def lenia_step(state: LeniaState, params: KernelGrowthParams) -> LeniaState:
    """One clamped Euler step of all kernels."""
    grid = state.grid
    spectra = [np.fft.rfft2(grid[:, :, c]) for c in range(3)]
    update = np.zeros_like(grid)
    for spec, kf in zip(params.kernels, params.kernel_ffts):
        u = np.fft.irfft2(spectra[spec.src] * kf, s=grid.shape[:2])
        update[:, :, spec.dst] += spec.weight * growth(u, spec.mu, spec.sigma)
    new = np.clip(grid + params.dt * update, 0.0, 1.0)
    return LeniaState(new)


def lenia_render(state: LeniaState, render_size: int = 224) -> np.ndarray:
    return upsample_nearest(state.grid, render_size)


def load_center_genome() -> np.ndarray:
    """Shipped stable genome used as the search center."""
    ref = resources.files(__package__).joinpath("lenia_center.json")
    data = json.loads(ref.read_text())
    dynamics = np.asarray(data["dynamics"], dtype=np.float64)
    patch = np.asarray(data["patch"], dtype=np.float64)
    return np.concatenate([dynamics, patch.reshape(-1)])


class Lenia(Substrate):
    name = "lenia"
    genome_dim = GENOME_DIM

    def __init__(self, grid_size: int = 64, render_size: int = 224, dt: float = 0.2):
        self.grid_size = grid_size
        self.render_size = render_size
        self.dt = dt

    def default_genome(self) -> np.ndarray:
        return load_center_genome()

    def prepare(self, values: np.ndarray) -> KernelGrowthParams:
        dynamics = values[:DYNAMICS_DIM]
        patch = np.clip(values[DYNAMICS_DIM:], 0.0, 1.0).reshape(PATCH_SHAPE)
        specs = decode_dynamics(dynamics)
        ffts = [np.fft.rfft2(build_kernel(s, self.grid_size)) for s in specs]
        return KernelGrowthParams(specs, ffts, self.dt, self.grid_size, patch)

    def init_state(self, params: KernelGrowthParams, rng) -> LeniaState:
        # deterministic init: the patch is part of the genome
        return lenia_init(params)

    def step(self, state: LeniaState, params: KernelGrowthParams) -> LeniaState:
        return lenia_step(state, params)

    def render(self, state: LeniaState, params: KernelGrowthParams) -> np.ndarray:
        return lenia_render(state, self.render_size)

    def state_array(self, state: LeniaState) -> np.ndarray:
        return state.grid
