"""Shared domain types and grid geometry.

Coordinates are (x = pixel column, y = pixel row) everywhere, y grows
downward. Grid cells are fovea-sized bins addressed as (row, col).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Fixation:
    """A single gaze position in image pixel coordinates."""

    x: float
    y: float


@dataclass(frozen=True)
class Scanpath:
    """Ordered fixation sequence from one subject or model on one trial.

    max_fixations is the saccade budget this scanpath was produced under:
    len(fixations) <= max_fixations + 1 (the initial fixation plus at most
    max_fixations moves).
    """

    source_id: str
    fixations: tuple[Fixation, ...]
    target_found: bool
    max_fixations: int

    def __post_init__(self):
        if len(self.fixations) < 1:
            raise ValueError("scanpath needs at least one fixation")
        if self.max_fixations < 1:
            raise ValueError("max_fixations must be positive")
        if len(self.fixations) > self.max_fixations + 1:
            raise ValueError(
                f"scanpath of {len(self.fixations)} fixations exceeds budget "
                f"of {self.max_fixations} saccades"
            )

    @property
    def n_saccades(self) -> int:
        return len(self.fixations) - 1


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned target box: top-left corner (x, y), width w, height h."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("bounding box must have positive width and height")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def contains(self, f: Fixation) -> bool:
        return self.x <= f.x < self.x + self.w and self.y <= f.y < self.y + self.h


@dataclass(frozen=True)
class DatasetSpec:
    """Dataset-level constants.

    cell_size is the side of the grid cells used by grid-based searchers
    (estimated from the fovea); the grid covers the whole image via ceiling
    division, so the last row/col of cells may be partial.
    """

    name: str
    image_height: int
    image_width: int
    fovea_size: int
    max_fixations: int
    cell_size: int
    color: bool = False

    def __post_init__(self):
        for attr in ("image_height", "image_width", "fovea_size", "max_fixations", "cell_size"):
            if getattr(self, attr) <= 0:
                raise ValueError(f"{attr} must be positive")

    @property
    def grid_rows(self) -> int:
        return -(-self.image_height // self.cell_size)

    @property
    def grid_cols(self) -> int:
        return -(-self.image_width // self.cell_size)

    @property
    def screen(self) -> tuple[int, int]:
        """(width, height) in pixels, for metric normalization."""
        return (self.image_width, self.image_height)


@dataclass(frozen=True)
class Trial:
    """One search problem: an image, a target box, and the recorded scanpaths."""

    trial_id: str
    image_ref: str
    target_bbox: BoundingBox
    target_category: str
    initial_fixation: Fixation
    human_scanpaths: tuple[Scanpath, ...] = ()
    target_template_ref: str | None = None


class ProbabilityGrid:
    """Row-major nonnegative float grid (prior, posterior, visibility, similarity).

    Wraps a read-only 2D float64 array. When normalized=True the values must
    sum to 1 within 1e-9.
    """

    __slots__ = ("values", "normalized")

    def __init__(self, values, normalized: bool = False):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("grid values must be 2-dimensional")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("grid dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid values must be finite")
        if np.any(arr < 0):
            raise ValueError("grid values must be nonnegative")
        if normalized and abs(float(arr.sum()) - 1.0) > 1e-9:
            raise ValueError("normalized grid must sum to 1 within 1e-9")
        arr = arr.copy()
        arr.flags.writeable = False
        self.values = arr
        self.normalized = normalized

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, ProbabilityGrid)
            and self.normalized == other.normalized
            and np.array_equal(self.values, other.values)
        )


def grid_cell_of(f: Fixation, spec: DatasetSpec) -> tuple[int, int]:
    """Grid cell containing a fixation: floor division by cell size, clamped.

    Clamping absorbs fixations exactly on the right/bottom image edge.
    """
    row = int(math.floor(f.y / spec.cell_size))
    col = int(math.floor(f.x / spec.cell_size))
    row = min(max(row, 0), spec.grid_rows - 1)
    col = min(max(col, 0), spec.grid_cols - 1)
    return (row, col)


def cell_center(cell: tuple[int, int], spec: DatasetSpec) -> Fixation:
    """Pixel-space center of a grid cell (partial edge cells use their actual extent)."""
    row, col = cell
    y0 = row * spec.cell_size
    y1 = min(y0 + spec.cell_size, spec.image_height)
    x0 = col * spec.cell_size
    x1 = min(x0 + spec.cell_size, spec.image_width)
    return Fixation(x=(x0 + x1) / 2.0, y=(y0 + y1) / 2.0)


def target_square(b: BoundingBox, spec: DatasetSpec) -> tuple[int, int, int, int]:
    """Pixel extent (x0, x1, y0, y1), half-open, of the square of side
    max(w, h) centered on the bbox, clipped to the image.

    Fractional square edges are rasterized outward (floor/ceil), so a pixel
    partially covered by the square counts as covered.
    """
    side = max(b.w, b.h)
    cx, cy = b.center
    x0 = int(math.floor(cx - side / 2.0))
    x1 = int(math.ceil(cx + side / 2.0))
    y0 = int(math.floor(cy - side / 2.0))
    y1 = int(math.ceil(cy + side / 2.0))
    x0 = max(x0, 0)
    y0 = max(y0, 0)
    x1 = min(x1, spec.image_width)
    y1 = min(y1, spec.image_height)
    return (x0, x1, y0, y1)


def bbox_grid_cells(b: BoundingBox, spec: DatasetSpec) -> set[tuple[int, int]]:
    """Grid cells whose pixel rectangle overlaps the target square by >= 1 pixel."""
    x0, x1, y0, y1 = target_square(b, spec)
    if x0 >= x1 or y0 >= y1:
        return set()
    cs = spec.cell_size
    rows = range(y0 // cs, min((y1 - 1) // cs, spec.grid_rows - 1) + 1)
    cols = range(x0 // cs, min((x1 - 1) // cs, spec.grid_cols - 1) + 1)
    return {(r, c) for r in rows for c in cols}
