"""Binary outer-totalistic cellular automata on a toroidal 2-D lattice.

A rule is a pair of 9-bit masks over Moore neighbor counts 0..8: one for
birth, one for survival. All 2^18 rules form the searchable space;
Conway's Game of Life is B3/S23. Grids wrap around at the edges.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..core import Frame, Substrate, upsample_nearest

RULE_SPACE_SIZE = 1 << 18

_NOTATION_RE = re.compile(r"^B([0-8]*)/S([0-8]*)$")

SPARSITY_LOW = 0.05
SPARSITY_HIGH = 0.4


@dataclass(frozen=True)
class CaRule:
    """Birth/survive masks, one bit per neighbor count 0..8."""

    birth_mask: int
    survive_mask: int

    def __post_init__(self):
        if not 0 <= self.birth_mask < 512 or not 0 <= self.survive_mask < 512:
            raise ValueError("masks must fit in 9 bits")

    @property
    def packed(self) -> int:
        """18-bit encoding: bits 0-8 birth, bits 9-17 survive."""
        return self.birth_mask | (self.survive_mask << 9)

    @staticmethod
    def from_packed(packed: int) -> "CaRule":
        if not 0 <= packed < RULE_SPACE_SIZE:
            raise ValueError(f"packed rule {packed} out of range [0, 2^18)")
        return CaRule(packed & 0x1FF, packed >> 9)

    def to_notation(self) -> str:
        birth = "".join(str(i) for i in range(9) if self.birth_mask >> i & 1)
        survive = "".join(str(i) for i in range(9) if self.survive_mask >> i & 1)
        return f"B{birth}/S{survive}"


class RuleParseError(ValueError):
    def __init__(self, text: str, position: int, reason: str):
        self.position = position
        super().__init__(f"bad rule string {text!r} at position {position}: {reason}")


def rule_from_notation(text: str) -> CaRule:
    """Parse a Golly-style "B.../S..." rule string."""
    m = _NOTATION_RE.match(text)
    if not m:
        for pos, ch in enumerate(text):
            if ch not in "BS/012345678":
                raise RuleParseError(text, pos, f"unexpected character {ch!r}")
        raise RuleParseError(text, 0, "expected B[digits]/S[digits]")
    masks = []
    for group_idx, digits in enumerate(m.groups()):
        mask = 0
        for i, d in enumerate(digits):
            bit = 1 << int(d)
            if mask & bit:
                pos = m.start(group_idx + 1) + i
                raise RuleParseError(text, pos, f"repeated digit {d!r}")
            mask |= bit
        masks.append(mask)
    return CaRule(masks[0], masks[1])


@dataclass
class CaState:
    """Binary occupancy grid with toroidal wraparound."""

    grid: np.ndarray


def ca_init(
    rule: CaRule,
    rng: np.random.Generator,
    grid_size: int = 64,
    sparsity: float | None = None,
) -> CaState:
    """Random grid: one sparsity level drawn from U(0.05, 0.4), then each
    cell alive independently with that probability.

    `sparsity` overrides the draw (debug hook).
    """
    if sparsity is None:
        sparsity = rng.uniform(SPARSITY_LOW, SPARSITY_HIGH)
    grid = (rng.random((grid_size, grid_size)) < sparsity).astype(np.uint8)
    return CaState(grid)


def ca_neighbor_counts(grid: np.ndarray) -> np.ndarray:
    """Living Moore neighbors per cell, wrapping at the edges.

    Accepts extra leading batch dimensions; the last two axes are the
    lattice."""
    pad = [(0, 0)] * (grid.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(grid, pad, mode="wrap")
    return (
        p[..., :-2, :-2] + p[..., :-2, 1:-1] + p[..., :-2, 2:]
        + p[..., 1:-1, :-2] + p[..., 1:-1, 2:]
        + p[..., 2:, :-2] + p[..., 2:, 1:-1] + p[..., 2:, 2:]
    )


@lru_cache(maxsize=1024)
def _rule_table(packed: int) -> np.ndarray:
    """Next cell state indexed by alive*9 + neighbor count."""
    rule = CaRule.from_packed(packed)
    birth = [(rule.birth_mask >> i) & 1 for i in range(9)]
    survive = [(rule.survive_mask >> i) & 1 for i in range(9)]
    return np.array(birth + survive, dtype=np.uint8)


def ca_apply_rule(grid: np.ndarray, counts: np.ndarray, rule: CaRule) -> np.ndarray:
    return _rule_table(rule.packed)[grid * 9 + counts]


def ca_step(state: CaState, rule: CaRule) -> CaState:
    """One synchronous update of the whole grid."""
    grid = state.grid
    return CaState(ca_apply_rule(grid, ca_neighbor_counts(grid), rule))


def ca_render(state: CaState, render_size: int = 224) -> Frame:
    """Alive cells white, dead black, nearest-neighbor upsampled."""
    rgb = np.repeat(state.grid.astype(np.float64)[:, :, None], 3, axis=2)
    return Frame(upsample_nearest(rgb, render_size), 0)


class LifelikeCA(Substrate):
    """Substrate adapter: genome is the 18 rule bits as 0/1 values."""

    name = "lifelike_ca"
    genome_dim = 18

    def __init__(self, grid_size: int = 64, render_size: int = 224):
        self.grid_size = grid_size
        self.render_size = render_size

    def default_genome(self) -> np.ndarray:
        return self.genome_from_rule(rule_from_notation("B3/S23"))

    @staticmethod
    def genome_from_rule(rule: CaRule) -> np.ndarray:
        bits = [(rule.packed >> i) & 1 for i in range(18)]
        return np.array(bits, dtype=np.float64)

    def prepare(self, values: np.ndarray) -> CaRule:
        packed = 0
        for i, v in enumerate(values):
            if v >= 0.5:
                packed |= 1 << i
        return CaRule.from_packed(packed)

    def init_state(self, params: CaRule, rng: np.random.Generator) -> CaState:
        return ca_init(params, rng, self.grid_size)

    def step(self, state: CaState, params: CaRule) -> CaState:
        return ca_step(state, params)

    def render(self, state: CaState, params: CaRule) -> np.ndarray:
        return ca_render(state, self.render_size).pixels

    def state_array(self, state: CaState) -> np.ndarray:
        return state.grid
