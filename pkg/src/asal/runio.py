"""Run-directory plumbing: resolved config, CSV curves, frames,
checkpoints, genome and archive files.

Every run directory holds config.json with the fully resolved settings,
so any run can be re-executed bit-identically.
"""

from __future__ import annotations

import csv
import pickle
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from PIL import Image

from .config import RunConfig
from .core import Frame
from .search.diversity_ga import Archive, ArchiveMember


def prepare_run_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "frames").mkdir(exist_ok=True)
    (out / "report").mkdir(exist_ok=True)
    (out / "best").mkdir(exist_ok=True)
    (out / "config.json").write_text(cfg.to_json())
    return out


def write_csv(path: Path, header: list[str], rows: Iterable[Iterable[Any]]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v: Any) -> Any:
    # repr round-trips floats, keeping reruns byte-identical
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def save_frame_png(frame: Frame, path: Path) -> None:
    arr = np.clip(frame.pixels * 255.0, 0, 255).round().astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def save_image_png(pixels: np.ndarray, path: Path) -> None:
    arr = np.clip(pixels * 255.0, 0, 255).round().astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def load_image_frame(path: str | Path) -> Frame:
    img = Image.open(path).convert("RGB")
    return Frame(np.asarray(img, dtype=np.float64) / 255.0, 0)


def save_genome(path: Path, substrate: str, values: np.ndarray, extra: dict | None = None) -> None:
    import json

    payload = {"substrate": substrate, "values": [float(v) for v in values]}
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload))


def load_genome(path: str | Path) -> tuple[str, np.ndarray]:
    import json

    data = json.loads(Path(path).read_text())
    return data["substrate"], np.asarray(data["values"], dtype=np.float64)


def save_checkpoint(path: Path, payload: dict) -> None:
    with open(path, "wb") as f:
        pickle.dump(payload, f, protocol=pickle.HIGHEST_PROTOCOL)


def load_checkpoint(path: str | Path) -> dict:
    with open(path, "rb") as f:
        return pickle.load(f)


def save_archive(path: Path, substrate: str, archive: Archive) -> None:
    import json

    payload = {
        "substrate": substrate,
        "capacity": archive.capacity,
        "inserted": archive.inserted,
        "genomes": [[float(v) for v in m.values] for m in archive.members],
        "embeddings": [[float(v) for v in m.embedding] for m in archive.members],
        "ages": [m.age for m in archive.members],
    }
    path.write_text(json.dumps(payload))


def load_archive(path: str | Path) -> tuple[str, Archive]:
    import json

    data = json.loads(Path(path).read_text())
    members = [
        ArchiveMember(
            np.asarray(g, dtype=np.float64), np.asarray(e, dtype=np.float64), a
        )
        for g, e, a in zip(data["genomes"], data["embeddings"], data["ages"])
    ]
    return data["substrate"], Archive(members, data["capacity"], data["inserted"])
