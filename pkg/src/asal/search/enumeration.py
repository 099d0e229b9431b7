"""Brute-force sweep of the 2^18 binary CA rules.

Each rule is scored by its open-endedness over several random initial
states. Rules are independent, so the sweep shards across a process
pool; per-rule randomness is keyed by (base seed + seed index, rule), so
the report does not depend on worker count or scheduling.

The pixel-backend fast path steps a whole chunk of rules as one batched
lattice and embeds captures vectorized. Every numeric step reproduces
the reference path (score_rule) bitwise: same summation orders, same
degenerate-embedding convention, same per-trajectory similarity matmul.
"""

from __future__ import annotations

import multiprocessing as mp
from dataclasses import dataclass

import numpy as np

from ..core import Frame, RolloutSpec
from ..embedding import PixelEmbedder, make_embedder
from ..objectives import open_endedness_score
from ..rng import make_rng
from ..substrates.lifelike import (
    RULE_SPACE_SIZE,
    CaRule,
    _rule_table,
    ca_init,
    ca_neighbor_counts,
    ca_render,
    ca_step,
)


@dataclass(frozen=True)
class EnumerationConfig:
    grid_size: int = 64
    total_steps: int = 2048
    n_captures: int = 32
    n_seeds: int = 256
    base_seed: int = 0
    embedder_backend: str = "pixel"
    render_size: int | None = None  # None: embed the native grid

    @property
    def capture_steps(self) -> tuple[int, ...]:
        return RolloutSpec.subsampled(self.total_steps, self.n_captures).capture_steps


@dataclass(frozen=True)
class RuleRecord:
    packed: int
    notation: str
    mean_score: float
    seed_scores: tuple[float, ...]


@dataclass
class EnumerationReport:
    records: list[RuleRecord]  # sorted ascending: most open-ended first
    config: EnumerationConfig

    def rank_of(self, packed: int) -> int:
        for i, rec in enumerate(self.records):
            if rec.packed == packed:
                return i
        raise KeyError(packed)


def score_rule(packed: int, cfg: EnumerationConfig, embedder=None) -> RuleRecord:
    """Reference scorer: one rule through the generic frame/embed path."""
    if embedder is None:
        embedder = make_embedder(cfg.embedder_backend, cached=False)
    rule = CaRule.from_packed(packed)
    captures = set(cfg.capture_steps)
    last = max(captures)
    render_size = cfg.render_size or cfg.grid_size
    scores = []
    for s in range(cfg.n_seeds):
        rng = make_rng(cfg.base_seed + s, stream_id=packed)
        state = ca_init(rule, rng, cfg.grid_size)
        frames: list[Frame] = []
        if 0 in captures:
            frames.append(Frame(ca_render(state, render_size).pixels, 0))
        for t in range(1, last + 1):
            state = ca_step(state, rule)
            if t in captures:
                frames.append(Frame(ca_render(state, render_size).pixels, t))
        emb = embedder.embed_images(frames)
        scores.append(open_endedness_score(emb))
    mean = float(np.mean(scores))
    return RuleRecord(packed, rule.to_notation(), mean, tuple(scores))


def _batch_embed_grids(grids: np.ndarray) -> np.ndarray:
    """Pixel embeddings of binary lattices, any leading batch shape.

    Reproduces PixelEmbedder on the white-on-black rendering bitwise:
    box-average into 8x8 cells, repeat to 3 channels, subtract the mean,
    L2-normalize, uniform frames fall back to the first basis vector.
    """
    cells = PixelEmbedder.CELLS
    h, w = grids.shape[-2:]
    rb = (np.arange(cells + 1) * h) // cells
    cb = (np.arange(cells + 1) * w) // cells
    g = grids.astype(np.float64)
    rows = np.add.reduceat(g, rb[:-1], axis=-2)
    both = np.add.reduceat(rows, cb[:-1], axis=-1)
    counts = np.outer(np.diff(rb), np.diff(cb)).astype(np.float64)
    avg = both / counts
    flat = np.repeat(avg[..., None], 3, axis=-1).reshape(*grids.shape[:-2], -1)
    flat = flat - flat.mean(axis=-1, keepdims=True)
    norms = np.linalg.norm(flat, axis=-1, keepdims=True)
    degenerate = norms[..., 0] < 1e-12
    safe = np.where(norms < 1e-12, 1.0, norms)
    out = flat / safe
    out[degenerate] = 0.0
    out[degenerate, 0] = 1.0
    return out


def _oe_from_embeddings(emb: np.ndarray) -> float:
    """Open-endedness of one (captures, D) block, matching the
    reference formula bitwise."""
    sims = emb @ emb.T
    n = emb.shape[0]
    mask = np.tril(np.ones((n, n), dtype=bool), k=-1)
    masked = np.where(mask, sims, -np.inf)
    best_past = masked[1:].max(axis=1)
    return float(np.mean(best_past))


def score_rule_chunk(chunk: list[int], cfg: EnumerationConfig) -> list[RuleRecord]:
    """Score a chunk of rules with the batched lattice kernel."""
    r, s, g = len(chunk), cfg.n_seeds, cfg.grid_size
    tables = np.stack([_rule_table(p) for p in chunk])  # (R, 18)
    grids = np.empty((r, s, g, g), dtype=np.uint8)
    for i, packed in enumerate(chunk):
        rule = CaRule.from_packed(packed)
        for seed in range(s):
            rng = make_rng(cfg.base_seed + seed, stream_id=packed)
            grids[i, seed] = ca_init(rule, rng, g).grid

    captures = set(cfg.capture_steps)
    last = max(captures)
    embeddings = np.empty((len(cfg.capture_steps), r, s, 192))
    cap_i = 0
    if 0 in captures:
        embeddings[cap_i] = _batch_embed_grids(grids)
        cap_i += 1
    rule_axis = np.arange(r)[:, None, None, None]
    for t in range(1, last + 1):
        counts = ca_neighbor_counts(grids)
        grids = tables[rule_axis, grids * 9 + counts]
        if t in captures:
            embeddings[cap_i] = _batch_embed_grids(grids)
            cap_i += 1

    records = []
    for i, packed in enumerate(chunk):
        scores = [_oe_from_embeddings(embeddings[:, i, seed]) for seed in range(s)]
        records.append(
            RuleRecord(
                packed,
                CaRule.from_packed(packed).to_notation(),
                float(np.mean(scores)),
                tuple(scores),
            )
        )
    return records


_worker_cfg: EnumerationConfig | None = None
_worker_embedder = None


def _worker_init(cfg: EnumerationConfig) -> None:
    global _worker_cfg, _worker_embedder
    _worker_cfg = cfg
    if not _fast_path_ok(cfg):
        _worker_embedder = make_embedder(cfg.embedder_backend, cached=False)


def _fast_path_ok(cfg: EnumerationConfig) -> bool:
    native = cfg.render_size is None or cfg.render_size == cfg.grid_size
    return cfg.embedder_backend == "pixel" and native and cfg.grid_size % 8 == 0


def _score_chunk(chunk: list[int]) -> list[RuleRecord]:
    if _fast_path_ok(_worker_cfg):
        return score_rule_chunk(chunk, _worker_cfg)
    return [score_rule(p, _worker_cfg, _worker_embedder) for p in chunk]


def enumerate_rules(
    cfg: EnumerationConfig,
    rules: list[int] | None = None,
    workers: int = 1,
    chunk_size: int = 64,
    progress=None,
) -> EnumerationReport:
    """Score every rule (or the given subset) and sort ascending.

    The report is identical for any worker count: scores depend only on
    (config, rule) and the final ordering is (score, packed).
    """
    if rules is None:
        rules = list(range(RULE_SPACE_SIZE))
    chunks = [rules[i : i + chunk_size] for i in range(0, len(rules), chunk_size)]

    records: list[RuleRecord] = []
    if workers <= 1:
        _worker_init(cfg)
        for chunk in chunks:
            records.extend(_score_chunk(chunk))
            if progress:
                progress(len(records), len(rules))
    else:
        ctx = mp.get_context("spawn")
        with ctx.Pool(workers, initializer=_worker_init, initargs=(cfg,)) as pool:
            for part in pool.imap_unordered(_score_chunk, chunks):
                records.extend(part)
                if progress:
                    progress(len(records), len(rules))

    records.sort(key=lambda r: (r.mean_score, r.packed))
    return EnumerationReport(records, cfg)
