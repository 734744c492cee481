"""Ground-truth height fields: ramps, block targets and a canopy proxy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import io
from .errors import FormatError
from .rng import make_rng


@dataclass(frozen=True)
class HeightField:
    heights: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        h = np.array(self.heights, dtype=float)
        if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 2:
            raise ValueError("height field must be a 2-D grid of at least 2x2")
        mask = np.isfinite(h) if self.mask is None else np.array(self.mask, dtype=bool)
        if mask.shape != h.shape:
            raise ValueError("mask shape does not match heights")
        if not np.all(np.isfinite(h[mask])):
            raise ValueError("masked-in heights must be finite")
        h[~mask] = np.nan
        h.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "mask", mask)

    @property
    def rows(self):
        return self.heights.shape[0]

    @property
    def cols(self):
        return self.heights.shape[1]

    @property
    def shape(self):
        return self.heights.shape


@dataclass(frozen=True)
class Block:
    row0: int
    col0: int
    rows: int
    cols: int
    height: float


def ramp_scene(rows, cols, max_height):
    """Linear slope from 0 at near range to ``max_height`` at far range."""
    if max_height < 0:
        raise ValueError("max_height must be non-negative")
    ramp = np.linspace(0.0, float(max_height), cols)
    return HeightField(np.tile(ramp, (rows, 1)))


def blocks_scene(base: HeightField, blocks):
    """Raise rectangular targets on top of ``base``; overlaps add up."""
    h = np.array(base.heights)
    for blk in blocks:
        if not isinstance(blk, Block):
            blk = Block(**blk)
        r0, c0 = int(blk.row0), int(blk.col0)
        r1, c1 = r0 + int(blk.rows), c0 + int(blk.cols)
        if r0 < 0 or c0 < 0 or blk.rows < 1 or blk.cols < 1 or r1 > base.rows or c1 > base.cols:
            raise ValueError(f"block {blk} falls outside the {base.rows}x{base.cols} grid")
        h[r0:r1, c0:c1] += blk.height
    return HeightField(h, base.mask)


def default_blocks(rows, cols, count=12, height=30.0):
    """Evenly spaced square targets, three per row of the layout."""
    per_row = 3
    n_rows = -(-count // per_row)
    size = max(1, min(rows // (2 * n_rows + 1), cols // (2 * per_row + 1)))
    out = []
    for k in range(count):
        i, j = divmod(k, per_row)
        r0 = (2 * i + 1) * rows // (2 * n_rows + 1)
        c0 = (2 * j + 1) * cols // (2 * per_row + 1)
        out.append(Block(r0, c0, size, size, height * (0.5 + 0.5 * (k % 3) / 2)))
    return out


def canopy_scene(rows, cols, mean_height, jitter_std, density, seed):
    """Sparse scatterers with heights from a zero-truncated normal."""
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    if jitter_std < 0 or mean_height < 0:
        raise ValueError("mean_height and jitter_std must be non-negative")
    rng = make_rng(seed, "canopy")
    mask = rng.random((rows, cols)) < density
    h = mean_height + jitter_std * rng.standard_normal((rows, cols))
    bad = h < 0
    while bad.any():
        h[bad] = mean_height + jitter_std * rng.standard_normal(bad.sum())
        bad = h < 0
    h[~mask] = np.nan
    return HeightField(h, mask)


def max_height_difference(field: HeightField):
    vals = field.heights[field.mask]
    if vals.size == 0:
        raise ValueError("height field has no masked-in cells")
    return float(vals.max() - vals.min())


def write_dem_csv(path, field: HeightField, azimuth_spacing=2.0, range_spacing=0.93):
    """Headered CSV: rows, cols, cell size, then row-major heights (nan = masked)."""
    io.write_grid_csv(path, {"azimuth_spacing": float(azimuth_spacing), "range_spacing": float(range_spacing)},
                      field.heights)


def read_dem_csv(path):
    header, grid = io.read_grid_csv(path)
    try:
        return HeightField(grid)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
