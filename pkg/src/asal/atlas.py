"""2-D maps of discovered simulations.

Final-state embeddings are projected onto their top two principal
components, scaled into the unit square, and a tile grid samples one
representative genome per occupied tile. Rendering those genomes' final
frames in tile order gives the atlas mosaic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Frame


@dataclass
class AtlasLayout:
    grid_w: int
    grid_h: int
    tiles: dict[tuple[int, int], int]  # (row, col) -> genome index
    projection: np.ndarray  # (n, 2) coordinates in [0, 1]^2


def project_2d(embeddings: np.ndarray) -> np.ndarray:
    """Top-2 principal component scores, min-max scaled to [0, 1]^2.

    Sign convention: each component's largest-magnitude loading is made
    positive, so the projection is deterministic. Degenerate directions
    (no variance) collapse to a zero coordinate.
    """
    e = np.asarray(embeddings, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] < 2:
        raise ValueError("need at least 2 embeddings")
    centered = e - e.mean(axis=0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)

    coords = np.zeros((e.shape[0], 2))
    for axis in range(2):
        if axis >= svals.shape[0] or svals[axis] < 1e-12:
            continue  # rank-deficient: leave the axis at zero
        comp = vt[axis]
        if comp[np.argmax(np.abs(comp))] < 0:
            comp = -comp
        scores = centered @ comp
        lo, hi = scores.min(), scores.max()
        if hi - lo > 1e-12:
            coords[:, axis] = (scores - lo) / (hi - lo)
    return coords


def grid_sample(coords: np.ndarray, grid_w: int, grid_h: int) -> AtlasLayout:
    """Pick per tile the genome nearest the tile center.

    Tiles nobody projects into stay empty. Distance ties go to the lower
    genome index.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if np.any(coords < 0) or np.any(coords > 1):
        raise ValueError("coordinates must lie in [0, 1]^2")
    cols = np.minimum((coords[:, 0] * grid_w).astype(int), grid_w - 1)
    rows = np.minimum((coords[:, 1] * grid_h).astype(int), grid_h - 1)

    tiles: dict[tuple[int, int], int] = {}
    best_d2: dict[tuple[int, int], float] = {}
    for idx in range(coords.shape[0]):
        key = (int(rows[idx]), int(cols[idx]))
        center = ((key[1] + 0.5) / grid_w, (key[0] + 0.5) / grid_h)
        d2 = (coords[idx, 0] - center[0]) ** 2 + (coords[idx, 1] - center[1]) ** 2
        if key not in tiles or d2 < best_d2[key]:
            tiles[key] = idx
            best_d2[key] = d2
    return AtlasLayout(grid_w, grid_h, tiles, coords)


def render_atlas(layout: AtlasLayout, frames: dict[int, Frame]) -> np.ndarray:
    """Mosaic of tile representatives; empty tiles are black."""
    sizes = {frames[i].pixels.shape[:2] for i in layout.tiles.values()}
    if len(sizes) > 1:
        raise ValueError("all frames must share one size")
    tile_h, tile_w = sizes.pop() if sizes else (32, 32)
    mosaic = np.zeros((layout.grid_h * tile_h, layout.grid_w * tile_w, 3))
    for (row, col), idx in layout.tiles.items():
        if idx not in frames:
            raise KeyError(f"no frame for genome {idx}")
        mosaic[
            row * tile_h : (row + 1) * tile_h, col * tile_w : (col + 1) * tile_w
        ] = frames[idx].pixels
    return mosaic
