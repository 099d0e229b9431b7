"""Run configuration: JSON in, validated RunConfig out.

A config names the substrate, the embedding backend, the rollout
lengths, and the per-command blocks (optimizer, archive, enumeration,
quantify, atlas). Presets fill in defaults: "desk" shrinks everything so
a run finishes at a desk, "paper" uses the full-scale constants.
Validation errors carry the offending field path.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .substrates import substrate_names


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class OptimizerBlock:
    population: int = 16
    iterations: int = 100
    sigma0: float = 0.1
    checkpoint_every: int = 50


@dataclass
class ArchiveBlock:
    capacity: int = 256
    batch: int = 32
    mutation_sigma: float = 0.1
    iterations: int = 500
    init: str = "random"  # random | zeros
    init_scale: float = 1.0
    embed: str = "final"  # final | mean: member embedding over captures
    log_every: int = 10
    checkpoint_every: int = 100


@dataclass
class EnumerationBlock:
    seeds: int = 4
    rules: list[int] | None = None  # None: all 2^18
    top_k: int = 16
    chunk_size: int = 256


@dataclass
class QuantifyBlock:
    analysis: str = "interpolate"  # interpolate | importance | plateau | population
    n_points: int = 9
    reference: str = "a"
    theta_a: list[float] | None = None
    theta_b: list[float] | None = None
    theta: list[float] | None = None
    deltas: list[float] | None = None
    dims: list[int] | None = None
    window: int = 4
    epsilon: float = 1e-3
    counts: list[int] | None = None


@dataclass
class AtlasBlock:
    grid_w: int = 12
    grid_h: int = 8
    archive_file: str | None = None
    tile_size: int = 64


@dataclass
class RunConfig:
    substrate: str = "lenia"
    substrate_params: dict[str, Any] = field(default_factory=dict)
    embedder: str = "pixel"
    prompts: list[str] = field(default_factory=list)
    target_image: str | None = None
    total_steps: int = 64
    n_captures: int = 8
    seed: int = 0
    preset: str = "desk"
    workers: int = 1
    out_dir: str = "runs/run"
    optimizer: OptimizerBlock = field(default_factory=OptimizerBlock)
    archive: ArchiveBlock = field(default_factory=ArchiveBlock)
    enumeration: EnumerationBlock = field(default_factory=EnumerationBlock)
    quantify: QuantifyBlock = field(default_factory=QuantifyBlock)
    atlas: AtlasBlock = field(default_factory=AtlasBlock)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


# Per-substrate defaults. "desk" favors minutes-scale runs with the pixel
# embedder; "paper" uses the full-scale constants and expects the fm
# backend for anything semantic.
PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "desk": {
        "_common": {"embedder": "pixel", "workers": 1},
        "lifelike_ca": {
            "substrate_params": {"grid_size": 32, "render_size": 32},
            "total_steps": 128,
            "n_captures": 32,
            "enumeration": {"seeds": 4},
        },
        "lenia": {
            "substrate_params": {"grid_size": 32, "render_size": 64},
            "total_steps": 32,
            "n_captures": 4,
            "optimizer": {"population": 16, "iterations": 30, "sigma0": 0.15},
        },
        "boids": {
            "substrate_params": {"n_boids": 16, "k_neighbors": 8, "render_size": 64},
            "total_steps": 32,
            "n_captures": 4,
            "archive": {"capacity": 256, "iterations": 500},
        },
        "particle_life": {
            "substrate_params": {"n_particles": 600, "render_size": 64},
            "total_steps": 100,
            "n_captures": 4,
        },
        "nca": {
            "substrate_params": {"grid_size": 32, "render_size": 64},
            "total_steps": 32,
            "n_captures": 4,
        },
    },
    "paper": {
        "_common": {"embedder": "fm", "workers": 8},
        "lifelike_ca": {
            "substrate_params": {"grid_size": 64, "render_size": 224},
            "total_steps": 2048,
            "n_captures": 32,
            "enumeration": {"seeds": 256},
        },
        "lenia": {
            "substrate_params": {"grid_size": 64, "render_size": 224},
            "total_steps": 256,
            "n_captures": 32,
            "optimizer": {"population": 16, "iterations": 10000, "sigma0": 0.1},
        },
        "boids": {
            "substrate_params": {"n_boids": 128, "k_neighbors": 16, "render_size": 224},
            "total_steps": 1000,
            "n_captures": 32,
            "archive": {"capacity": 8192, "iterations": 100000, "init": "zeros"},
        },
        "particle_life": {
            "substrate_params": {"n_particles": 5000, "render_size": 224},
            "total_steps": 1000,
            "n_captures": 32,
        },
        "nca": {
            "substrate_params": {"grid_size": 64, "render_size": 224},
            "total_steps": 256,
            "n_captures": 32,
        },
    },
}

_BLOCK_TYPES = {
    "optimizer": OptimizerBlock,
    "archive": ArchiveBlock,
    "enumeration": EnumerationBlock,
    "quantify": QuantifyBlock,
    "atlas": AtlasBlock,
}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _build(data: dict) -> RunConfig:
    cfg = RunConfig()
    for key, value in data.items():
        if key in _BLOCK_TYPES:
            block = getattr(cfg, key)
            for sub, sval in value.items():
                if not hasattr(block, sub):
                    raise ConfigError(f"{key}.{sub}", "unknown field")
                setattr(block, sub, sval)
        elif hasattr(cfg, key):
            setattr(cfg, key, value)
        else:
            raise ConfigError(key, "unknown field")
    return cfg


def resolve_config(
    file_data: dict | None,
    preset: str | None = None,
    overrides: dict | None = None,
    command: str | None = None,
) -> RunConfig:
    """Layer defaults <- preset <- config file <- CLI overrides, then
    validate for the given command."""
    data: dict = dict(file_data or {})
    preset = preset or data.get("preset") or "desk"
    if preset not in PRESETS:
        raise ConfigError("preset", f"unknown preset {preset!r}; use desk or paper")
    substrate = data.get("substrate") or (overrides or {}).get("substrate") or "lenia"

    layered: dict = {}
    layered = _merge(layered, PRESETS[preset]["_common"])
    if substrate in PRESETS[preset]:
        layered = _merge(layered, PRESETS[preset][substrate])
    layered = _merge(layered, data)
    if overrides:
        layered = _merge(layered, {k: v for k, v in overrides.items() if v is not None})
    layered["preset"] = preset
    layered.setdefault("substrate", substrate)

    cfg = _build(layered)
    validate_config(cfg, command)
    return cfg


def load_config_file(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON: {e}")


def validate_config(cfg: RunConfig, command: str | None = None) -> None:
    if cfg.substrate not in substrate_names():
        raise ConfigError("substrate", f"unknown substrate {cfg.substrate!r}")
    if cfg.embedder not in ("pixel", "fm"):
        raise ConfigError("embedder", f"must be 'pixel' or 'fm', got {cfg.embedder!r}")
    if cfg.total_steps < 1:
        raise ConfigError("total_steps", "must be >= 1")
    if cfg.n_captures < 1:
        raise ConfigError("n_captures", "must be >= 1")
    if cfg.workers < 1:
        raise ConfigError("workers", "must be >= 1")
    if cfg.optimizer.population < 2:
        raise ConfigError("optimizer.population", "must be >= 2")
    if cfg.optimizer.sigma0 <= 0:
        raise ConfigError("optimizer.sigma0", "must be positive")
    if cfg.archive.init not in ("random", "zeros"):
        raise ConfigError("archive.init", "must be 'random' or 'zeros'")
    if cfg.archive.embed not in ("final", "mean"):
        raise ConfigError("archive.embed", "must be 'final' or 'mean'")
    if cfg.archive.capacity < 2:
        raise ConfigError("archive.capacity", "must be >= 2")

    if command == "target":
        if not cfg.prompts and not cfg.target_image:
            raise ConfigError(
                "prompts", "target search needs prompts or a target_image"
            )
        if cfg.prompts and cfg.embedder == "pixel":
            raise ConfigError(
                "embedder",
                "the pixel backend cannot embed text; supply target_image "
                "or switch embedder to 'fm'",
            )
    if command == "enumerate" and cfg.substrate != "lifelike_ca":
        raise ConfigError(
            "substrate", "enumeration only applies to the lifelike_ca substrate"
        )
    if command == "quantify":
        q = cfg.quantify
        if q.analysis not in ("interpolate", "importance", "plateau", "population"):
            raise ConfigError("quantify.analysis", f"unknown analysis {q.analysis!r}")
        if q.analysis == "interpolate" and (q.theta_a is None or q.theta_b is None):
            raise ConfigError("quantify.theta_a", "interpolate needs theta_a and theta_b")
        if q.analysis == "importance":
            if not cfg.target_image and (not cfg.prompts or cfg.embedder == "pixel"):
                raise ConfigError(
                    "target_image",
                    "importance needs a prompt with a text-capable backend "
                    "or a target_image",
                )
        if q.analysis == "population":
            if cfg.substrate != "particle_life":
                raise ConfigError(
                    "quantify.analysis", "population sweep applies to particle_life"
                )
            if not q.counts:
                raise ConfigError("quantify.counts", "population sweep needs counts")
    if command == "atlas" and not cfg.atlas.archive_file:
        raise ConfigError("atlas.archive_file", "atlas needs an archive file")
