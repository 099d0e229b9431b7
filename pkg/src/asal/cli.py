"""Operator surface: run searches, enumerations, quantifications and
atlas builds into self-describing run directories.

    asal target     --config cfg.json [--preset desk|paper] ...
    asal enumerate  --config cfg.json ...
    asal illuminate --config cfg.json ...
    asal quantify   --config cfg.json ...
    asal atlas      --config cfg.json ...

Every run directory holds the resolved config.json; re-running with it
reproduces the run bit-identically. The fm backend locates its sidecar
via ASAL_SIDECAR (host:port) or ASAL_SIDECAR_CMD (argv string).
"""

from __future__ import annotations

import argparse
import multiprocessing as mp
import sys
from pathlib import Path

import numpy as np

from .atlas import grid_sample, project_2d, render_atlas
from .config import ConfigError, RunConfig, load_config_file, resolve_config
from .core import Frame, RolloutSpec, SimulationDiverged, rollout
from .embedding import make_embedder
from .objectives import PromptSchedule, target_score
from .pipeline import RolloutEvaluator
from .rng import make_rng
from .runio import (
    load_archive,
    load_checkpoint,
    load_genome,
    load_image_frame,
    prepare_run_dir,
    save_archive,
    save_checkpoint,
    save_frame_png,
    save_genome,
    save_image_png,
    write_csv,
)
from .search.diversity_ga import Archive, DivergenceBudgetExceeded, ga_illuminate
from .search.enumeration import EnumerationConfig, enumerate_rules
from .search.sep_cma_es import sep_cma_ask, sep_cma_init, sep_cma_tell
from .substrates import get_substrate
from .substrates.lifelike import CaRule, LifelikeCA

_DIVERGED_FITNESS = 1e9

# rng stream ids within one run seed
_SEARCH_STREAM = 1
_ARCHIVE_INIT_STREAM = 2


# ---------------------------------------------------------------- scoring

_POOL_EVALUATOR: RolloutEvaluator | None = None


def _pool_init(evaluator: RolloutEvaluator) -> None:
    global _POOL_EVALUATOR
    _POOL_EVALUATOR = evaluator


def _pool_eval(values: np.ndarray):
    try:
        return _POOL_EVALUATOR.trajectory_embeddings(values)
    except SimulationDiverged:
        return None


class PopulationScorer:
    """Maps genome batches to per-capture embeddings, on a worker pool
    when the embedder is process-safe (pixel), serially otherwise."""

    def __init__(self, evaluator: RolloutEvaluator, workers: int):
        self.evaluator = evaluator
        self._pool = None
        if workers > 1 and evaluator.embedder.describe().name == "pixel":
            ctx = mp.get_context("fork")
            self._pool = ctx.Pool(workers, initializer=_pool_init, initargs=(evaluator,))

    def embeddings(self, candidates) -> list[np.ndarray | None]:
        if self._pool is None:
            out = []
            for c in candidates:
                try:
                    out.append(self.evaluator.trajectory_embeddings(c))
                except SimulationDiverged:
                    out.append(None)
            return out
        return self._pool.map(_pool_eval, list(candidates))

    def final_embeddings(self, candidates) -> list[np.ndarray | None]:
        return [e if e is None else e[-1] for e in self.embeddings(candidates)]

    def mean_embeddings(self, candidates) -> list[np.ndarray | None]:
        """Renormalized mean over the captured frames' embeddings."""
        from .embedding import normalize

        return [
            e if e is None else normalize(e.mean(axis=0))
            for e in self.embeddings(candidates)
        ]

    def close(self) -> None:
        if self._pool is not None:
            self._pool.terminate()
            self._pool = None


# ---------------------------------------------------------------- helpers


def _schedule_steps(total_steps: int, n_prompts: int) -> tuple[int, ...]:
    """Evenly spaced prompt steps ending at the final step."""
    steps = sorted({round(total_steps * (i + 1) / n_prompts) for i in range(n_prompts)})
    return tuple(int(s) for s in steps)


def _build_schedule(cfg: RunConfig, embedder):
    """Returns (capture_steps, schedule, text_embeddings)."""
    if cfg.prompts:
        steps = _schedule_steps(cfg.total_steps, len(cfg.prompts))
        if len(steps) != len(cfg.prompts):  # collisions on tiny rollouts
            raise ConfigError("prompts", "more prompts than distinct steps")
        schedule = PromptSchedule(tuple(zip(steps, cfg.prompts)))
        texts = {p: embedder.embed_text(p) for p in set(cfg.prompts)}
        return steps, schedule, texts
    frame = load_image_frame(cfg.target_image)
    target = embedder.embed_image(frame)
    steps = (cfg.total_steps,)
    schedule = PromptSchedule(((cfg.total_steps, "__target_image__"),))
    return steps, schedule, {"__target_image__": target}


def _load_theta(spec, substrate) -> np.ndarray:
    """Genome from a config entry: inline list, genome.json path, or
    "default" for the substrate's search center."""
    if spec == "default" or spec is None:
        return substrate.default_genome()
    if isinstance(spec, str):
        name, values = load_genome(spec)
        if name != substrate.name:
            raise ConfigError("quantify", f"genome file is for substrate {name!r}")
        return values
    return np.asarray(spec, dtype=np.float64)


def _save_best_frames(out: Path, substrate, values: np.ndarray, cfg: RunConfig) -> None:
    spec = RolloutSpec.subsampled(cfg.total_steps, min(9, cfg.total_steps + 1), cfg.seed)
    try:
        traj = rollout(substrate, substrate.theta(values), spec)
    except SimulationDiverged:
        return
    for frame in traj.frames:
        save_frame_png(frame, out / "frames" / f"step_{frame.step_index:05d}.png")


def _plot_curve(path: Path, xs, ys, xlabel: str, ylabel: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# ---------------------------------------------------------------- target


def cmd_target(cfg: RunConfig, resume: str | None = None) -> Path:
    out = prepare_run_dir(cfg)
    substrate = get_substrate(cfg.substrate, **cfg.substrate_params)
    embedder = make_embedder(cfg.embedder)
    steps, schedule, texts = _build_schedule(cfg, embedder)
    spec = RolloutSpec(cfg.total_steps, steps, cfg.seed)
    evaluator = RolloutEvaluator(substrate, spec, embedder)

    opt = cfg.optimizer
    rng = make_rng(cfg.seed, _SEARCH_STREAM)
    state = sep_cma_init(substrate.theta().values, opt.sigma0)
    start_gen = 0
    best_score = -np.inf
    best_values = state.mean.copy()
    rows: list[list] = []

    if resume:
        payload = load_checkpoint(resume)
        state = payload["state"]
        rng.bit_generator.state = payload["rng_state"]
        start_gen = payload["iteration"]
        best_score = payload["best_score"]
        best_values = payload["best_values"]

    scorer = PopulationScorer(evaluator, cfg.workers)
    try:
        for gen in range(start_gen, opt.iterations):
            cands = sep_cma_ask(state, rng, opt.population)
            embs = scorer.embeddings(cands)
            scores = np.array(
                [
                    -_DIVERGED_FITNESS
                    if e is None
                    else target_score(e, steps, schedule, texts)
                    for e in embs
                ]
            )
            gen_best = int(np.argmax(scores))
            if scores[gen_best] > best_score:
                best_score = float(scores[gen_best])
                best_values = cands[gen_best].copy()
            state = sep_cma_tell(state, cands, -scores)
            rows.append([gen, best_score, float(scores.max()), float(scores.mean())])
            if (gen + 1) % opt.checkpoint_every == 0 or gen + 1 == opt.iterations:
                save_checkpoint(
                    out / f"checkpoint_{gen + 1:06d}.bin",
                    {
                        "kind": "target",
                        "state": state,
                        "rng_state": rng.bit_generator.state,
                        "iteration": gen + 1,
                        "best_score": best_score,
                        "best_values": best_values,
                    },
                )
    finally:
        scorer.close()

    write_csv(out / "scores.csv", ["iteration", "best_score", "gen_best", "gen_mean"], rows)
    save_genome(out / "best" / "genome.json", cfg.substrate, best_values,
                {"score": best_score})
    _save_best_frames(out, substrate, best_values, cfg)
    if rows:
        _plot_curve(out / "report" / "score_curve.png",
                    [r[0] for r in rows], [r[1] for r in rows],
                    "generation", "best target score")
    return out


# ---------------------------------------------------------------- enumerate


def cmd_enumerate(cfg: RunConfig) -> Path:
    out = prepare_run_dir(cfg)
    sp = cfg.substrate_params
    enum_cfg = EnumerationConfig(
        grid_size=sp.get("grid_size", 64),
        total_steps=cfg.total_steps,
        n_captures=cfg.n_captures,
        n_seeds=cfg.enumeration.seeds,
        base_seed=cfg.seed,
        embedder_backend=cfg.embedder,
    )
    report = enumerate_rules(
        enum_cfg,
        rules=cfg.enumeration.rules,
        workers=cfg.workers,
        chunk_size=cfg.enumeration.chunk_size,
    )

    seed_cols = [f"seed_{i}" for i in range(enum_cfg.n_seeds)]
    write_csv(
        out / "scores.csv",
        ["packed", "notation", "mean_oe", *seed_cols],
        ([r.packed, r.notation, r.mean_score, *r.seed_scores] for r in report.records),
    )

    counts, edges = np.histogram(
        [r.mean_score for r in report.records], bins=64, range=(-1.0, 1.0)
    )
    write_csv(
        out / "report" / "histogram.csv",
        ["bin_lo", "bin_hi", "count"],
        ([edges[i], edges[i + 1], int(c)] for i, c in enumerate(counts)),
    )

    best = report.records[0]
    save_genome(
        out / "best" / "genome.json",
        "lifelike_ca",
        LifelikeCA.genome_from_rule(CaRule.from_packed(best.packed)),
        {"notation": best.notation, "mean_oe": best.mean_score},
    )

    substrate = get_substrate("lifelike_ca", **sp)
    strip_spec = RolloutSpec.subsampled(cfg.total_steps, 8, cfg.seed)
    for rank, rec in enumerate(report.records[: cfg.enumeration.top_k]):
        theta = substrate.theta(
            LifelikeCA.genome_from_rule(CaRule.from_packed(rec.packed))
        )
        traj = rollout(substrate, theta, strip_spec)
        strip = np.concatenate([f.pixels for f in traj.frames], axis=1)
        tag = rec.notation.replace("/", "_")
        save_image_png(strip, out / "report" / f"strip_{rank:02d}_{tag}.png")
    return out


# ---------------------------------------------------------------- illuminate


def cmd_illuminate(cfg: RunConfig, resume: str | None = None) -> Path:
    out = prepare_run_dir(cfg)
    substrate = get_substrate(cfg.substrate, **cfg.substrate_params)
    embedder = make_embedder(cfg.embedder)
    # members are scored on their final state by default; archive.embed
    # = "mean" averages over the configured capture steps instead
    if cfg.archive.embed == "mean":
        spec = RolloutSpec.subsampled(cfg.total_steps, cfg.n_captures, cfg.seed)
    else:
        spec = RolloutSpec(cfg.total_steps, (cfg.total_steps,), cfg.seed)
    evaluator = RolloutEvaluator(substrate, spec, embedder)
    scorer = PopulationScorer(evaluator, cfg.workers)

    arc = cfg.archive
    rng = make_rng(cfg.seed, _SEARCH_STREAM)
    rows: list[list] = []
    start_iter = 0

    try:
        member_embeddings = (
            scorer.mean_embeddings if arc.embed == "mean" else scorer.final_embeddings
        )
        if resume:
            payload = load_checkpoint(resume)
            archive = payload["archive"]
            rng.bit_generator.state = payload["rng_state"]
            start_iter = payload["iteration"]
            rows = payload["rows"]
        else:
            init_rng = make_rng(cfg.seed, _ARCHIVE_INIT_STREAM)
            if arc.init == "zeros":
                genomes = np.zeros((arc.capacity, substrate.genome_dim))
            else:
                genomes = arc.init_scale * init_rng.standard_normal(
                    (arc.capacity, substrate.genome_dim)
                )
            embs = member_embeddings(genomes)
            keep = [(g, e) for g, e in zip(genomes, embs) if e is not None]
            if len(keep) < 2:
                raise DivergenceBudgetExceeded(len(genomes) - len(keep), len(genomes))
            archive = Archive.from_genomes(
                np.stack([g for g, _ in keep]),
                np.stack([e for _, e in keep]),
                capacity=len(keep),
            )
            rows.append([0, archive.diversity()])

        def on_iteration(it: int, arch: Archive, _rng=rng) -> None:
            if (it + 1) % arc.log_every == 0:
                rows.append([it + 1, arch.diversity()])
            if (it + 1) % arc.checkpoint_every == 0 or it + 1 == arc.iterations:
                save_checkpoint(
                    out / f"checkpoint_{it + 1:06d}.bin",
                    {
                        "kind": "illuminate",
                        "archive": arch,
                        "rng_state": _rng.bit_generator.state,
                        "iteration": it + 1,
                        "rows": rows,
                    },
                )

        archive = _run_ga(
            archive, member_embeddings, rng, arc, start_iter, on_iteration
        )
    finally:
        scorer.close()

    save_archive(out / "archive.json", cfg.substrate, archive)
    write_csv(out / "scores.csv", ["iteration", "diversity"], rows)
    if rows:
        _plot_curve(out / "report" / "diversity_curve.png",
                    [r[0] for r in rows], [r[1] for r in rows],
                    "iteration", "archive diversity (lower is better)")
    _render_archive_atlas(out, cfg, archive)
    return out


def _run_ga(archive, evaluate, rng, arc, start_iter, on_iteration):
    remaining = arc.iterations - start_iter

    def shifted(it, arch):
        on_iteration(it + start_iter, arch)

    return ga_illuminate(
        archive,
        evaluate,
        rng,
        iterations=remaining,
        batch=arc.batch,
        mutation_sigma=arc.mutation_sigma,
        on_iteration=shifted,
    )


def _render_archive_atlas(out: Path, cfg: RunConfig, archive: Archive) -> None:
    import json

    coords = project_2d(archive.embeddings)
    layout = grid_sample(coords, cfg.atlas.grid_w, cfg.atlas.grid_h)
    write_csv(
        out / "report" / "layout.csv",
        ["genome_id", "x", "y", "tile_row", "tile_col"],
        (
            [idx, coords[idx, 0], coords[idx, 1], row, col]
            for (row, col), idx in sorted(layout.tiles.items())
        ),
    )
    # an external projector (e.g. UMAP) can swap in by rewriting the
    # layout and naming itself here
    (out / "report" / "layout.meta.json").write_text(
        json.dumps({"projector": "pca", "grid_w": cfg.atlas.grid_w,
                    "grid_h": cfg.atlas.grid_h})
    )
    tile_substrate = get_substrate(
        cfg.substrate, **{**cfg.substrate_params, "render_size": cfg.atlas.tile_size}
    )
    spec = RolloutSpec(cfg.total_steps, (cfg.total_steps,), cfg.seed)
    frames: dict[int, Frame] = {}
    for idx in layout.tiles.values():
        theta = tile_substrate.theta(archive.members[idx].values)
        try:
            frames[idx] = rollout(tile_substrate, theta, spec).final_frame
        except SimulationDiverged:
            frames[idx] = Frame(
                np.zeros((cfg.atlas.tile_size, cfg.atlas.tile_size, 3)), 0
            )
    mosaic = render_atlas(layout, frames)
    save_image_png(mosaic, out / "report" / "atlas.png")


# ---------------------------------------------------------------- quantify


def cmd_quantify(cfg: RunConfig) -> Path:
    from . import quantify as q

    out = prepare_run_dir(cfg)
    substrate = get_substrate(cfg.substrate, **cfg.substrate_params)
    embedder = make_embedder(cfg.embedder)
    spec = RolloutSpec(cfg.total_steps, (cfg.total_steps,), cfg.seed)
    evaluator = RolloutEvaluator(substrate, spec, embedder)
    block = cfg.quantify

    if block.analysis == "interpolate":
        theta_a = _load_theta(block.theta_a, substrate)
        theta_b = _load_theta(block.theta_b, substrate)
        report = q.interpolate_curve(
            evaluator, theta_a, theta_b, block.n_points, block.reference
        )
        write_csv(out / "scores.csv", ["alpha", "similarity"],
                  zip(report.axis, report.scores))
        _plot_curve(out / "report" / "interpolate.png", report.axis, report.scores,
                    "interpolation alpha", "similarity to reference")

    elif block.analysis == "importance":
        theta = _load_theta(block.theta, substrate)
        target = _target_embedding(cfg, embedder)
        deltas = tuple(block.deltas) if block.deltas else q.DEFAULT_DELTAS
        ranking = q.param_importance(evaluator, theta, target, deltas, block.dims)
        write_csv(out / "scores.csv", ["dim", "std"], ranking)
        top = ranking[:20]
        _plot_bars(out / "report" / "importance.png",
                   [str(d) for d, _ in top], [s for _, s in top])

    elif block.analysis == "plateau":
        theta = _load_theta(block.theta, substrate)
        dense = RolloutSpec.subsampled(cfg.total_steps, cfg.n_captures, cfg.seed)
        dense_eval = RolloutEvaluator(substrate, dense, embedder)
        embs = dense_eval.trajectory_embeddings(theta)
        speeds = q.embedding_speed(embs, dense.capture_steps)
        idx = q.detect_plateau(speeds, block.window, block.epsilon)
        write_csv(out / "scores.csv", ["step", "speed"],
                  zip(dense.capture_steps[1:], speeds))
        plateau_step = None if idx is None else int(dense.capture_steps[idx + 1])
        (out / "report" / "plateau.txt").write_text(
            f"speed_index={idx}\nstep={plateau_step}\n"
        )
        _plot_curve(out / "report" / "plateau.png",
                    dense.capture_steps[1:], speeds, "step", "embedding speed")

    elif block.analysis == "population":
        theta = _load_theta(block.theta, substrate)
        target = _target_embedding(cfg, embedder)

        def make_eval(count: int) -> RolloutEvaluator:
            sub = get_substrate(
                cfg.substrate, **{**cfg.substrate_params, "n_particles": count}
            )
            return RolloutEvaluator(sub, spec, embedder)

        report = q.sweep_population(make_eval, block.counts, theta, target)
        write_csv(out / "scores.csv", ["count", "score"],
                  zip(report.axis, report.scores))
        _plot_curve(out / "report" / "population.png", report.axis, report.scores,
                    "population size", "target score")
    return out


def _target_embedding(cfg: RunConfig, embedder) -> np.ndarray:
    if cfg.target_image:
        return embedder.embed_image(load_image_frame(cfg.target_image))
    return embedder.embed_text(cfg.prompts[0])


def _plot_bars(path: Path, labels: list[str], values: list[float]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(labels)), labels, rotation=90, fontsize=7)
    ax.set_xlabel("genome dimension")
    ax.set_ylabel("score std")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# ---------------------------------------------------------------- atlas


def cmd_atlas(cfg: RunConfig) -> Path:
    out = prepare_run_dir(cfg)
    substrate_name, archive = load_archive(cfg.atlas.archive_file)
    if substrate_name != cfg.substrate:
        raise ConfigError(
            "atlas.archive_file",
            f"archive is for substrate {substrate_name!r}, config says {cfg.substrate!r}",
        )
    _render_archive_atlas(out, cfg, archive)
    return out


# ---------------------------------------------------------------- main


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--preset", choices=["desk", "paper"], help="constant preset")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--out", help="output run directory")
    p.add_argument("--resume", help="checkpoint file to resume from")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="asal", description="search engine for artificial-life simulations"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("target", "enumerate", "illuminate", "quantify", "atlas"):
        _add_common(sub.add_parser(name))
    args = parser.parse_args(argv)

    try:
        file_data = load_config_file(args.config) if args.config else {}
        overrides = {
            "workers": args.workers,
            "seed": args.seed,
            "out_dir": args.out,
        }
        cfg = resolve_config(file_data, args.preset, overrides, args.command)
        if args.command == "target":
            out = cmd_target(cfg, resume=args.resume)
        elif args.command == "enumerate":
            out = cmd_enumerate(cfg)
        elif args.command == "illuminate":
            out = cmd_illuminate(cfg, resume=args.resume)
        elif args.command == "quantify":
            out = cmd_quantify(cfg)
        else:
            out = cmd_atlas(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DivergenceBudgetExceeded as e:
        print(f"aborted: {e}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
