"""Tiled panoramic video model: grid geometry, rate ladder, saliency weights,
and the weighted quality metric."""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np


class Window(NamedTuple):
    """Origin of a rectangular tile window (top-left corner, in tiles)."""

    row: int
    col: int


@dataclass(frozen=True)
class RateLadder:
    """The discrete set of encoding rates a tile may use, in Mbps.

    Invariants: at least two levels, all positive, strictly increasing.
    """

    levels: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 2:
            raise ValueError("rate ladder needs at least 2 levels")
        if levels[0] <= 0.0:
            raise ValueError("rate ladder levels must be positive")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("rate ladder levels must be strictly increasing")

    @property
    def r_min(self) -> float:
        return self.levels[0]

    @property
    def r_max(self) -> float:
        return self.levels[-1]

    def floor(self, rate: float) -> float:
        """Largest ladder level <= rate."""
        i = bisect_right(self.levels, rate) - 1
        if i < 0:
            raise ValueError(f"rate {rate} below the lowest ladder level")
        return self.levels[i]

    def ceil(self, rate: float) -> float:
        """Smallest ladder level >= rate."""
        i = bisect_left(self.levels, rate)
        if i == len(self.levels):
            raise ValueError(f"rate {rate} above the highest ladder level")
        return self.levels[i]


@dataclass(frozen=True)
class QualityParams:
    """Constants of the per-tile quality curve a * rate**b.

    a > 0 and 0 < b < 1 keep the curve strictly increasing and strictly
    concave, so extra bitrate always helps but with diminishing returns.
    """

    a: float = 1.0
    b: float = 0.5

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError("quality scale a must be positive")
        if not 0.0 < self.b < 1.0:
            raise ValueError("quality exponent b must lie in (0, 1)")


@dataclass(frozen=True)
class TileGrid:
    """Tile layout of the panorama plus the viewport window size.

    Columns wrap horizontally (the panorama is a closed band); rows do not.
    Tiles are indexed row-major: tile = row * cols + col.
    """

    rows: int = 4
    cols: int = 8
    fov_rows: int = 2
    fov_cols: int = 3

    def __post_init__(self):
        if min(self.rows, self.cols, self.fov_rows, self.fov_cols) < 1:
            raise ValueError("grid dimensions must be positive")
        if self.fov_rows > self.rows or self.fov_cols > self.cols:
            raise ValueError("viewport window must fit inside the grid")

    @property
    def n_tiles(self) -> int:
        return self.rows * self.cols

    @property
    def fov_tiles(self) -> int:
        return self.fov_rows * self.fov_cols

    def window(self, origin: Window, height: int | None = None,
               width: int | None = None) -> tuple[int, ...]:
        """Tile ids of a height x width window anchored at origin, sorted.

        The column range wraps; the row range must fit without wrapping.
        """
        h = self.fov_rows if height is None else height
        w = self.fov_cols if width is None else width
        return _window_tiles(self, origin.row, origin.col % self.cols, h, w)

    def origins(self, height: int | None = None) -> tuple[Window, ...]:
        """All valid window origins for the given window height."""
        h = self.fov_rows if height is None else height
        return tuple(Window(r, c)
                     for r in range(self.rows - h + 1)
                     for c in range(self.cols))


@lru_cache(maxsize=None)
def _window_tiles(grid: TileGrid, row: int, col: int, h: int, w: int) -> tuple[int, ...]:
    if not 0 <= row <= grid.rows - h:
        raise ValueError(f"window rows {row}..{row + h - 1} fall outside the grid")
    tiles = sorted((row + dr) * grid.cols + (col + dc) % grid.cols
                   for dr in range(h) for dc in range(w))
    return tuple(tiles)


@dataclass(frozen=True)
class ChunkSpec:
    """One chunk's scenario: saliency weights plus predicted and realized
    viewport tile sets (both are contiguous windows on the grid)."""

    index: int
    duration: float
    weights: tuple[float, ...]
    predicted_fov: frozenset[int]
    actual_fov: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "predicted_fov", frozenset(self.predicted_fov))
        object.__setattr__(self, "actual_fov", frozenset(self.actual_fov))
        if self.index < 1:
            raise ValueError("chunk index is 1-based")
        if not self.duration > 0.0:
            raise ValueError("chunk duration must be positive")
        if any(w < 1.0 for w in self.weights):
            raise ValueError("saliency weights must be >= 1")
        if len(self.predicted_fov) != len(self.actual_fov):
            raise ValueError("predicted and actual viewports must be equal-sized")


def quality_utility(rates: Sequence[float], weights: Sequence[float],
                    params: QualityParams) -> float:
    """Saliency-weighted quality of a set of tiles: sum of w * a * rate**b.

    A rate of 0 models an unsent (blank) tile and contributes nothing.
    """
    if len(rates) != len(weights):
        raise ValueError("rates and weights must have equal length")
    a, b = params.a, params.b
    total = 0.0
    for r, w in zip(rates, weights):
        if r < 0.0:
            raise ValueError("tile rates must be nonnegative")
        if r > 0.0:
            total += w * a * r ** b
    return total


def chunk_size_megabits(rates: Sequence[float], duration: float) -> float:
    """Total encoded size of a chunk in megabits: duration * sum of rates."""
    if not duration > 0.0:
        raise ValueError("duration must be positive")
    total = 0.0
    for r in rates:
        if r < 0.0:
            raise ValueError("tile rates must be nonnegative")
        total += r
    return duration * total


def make_weight_map(rng: np.random.Generator, grid: TileGrid) -> list[float]:
    """Draw per-tile saliency weights for one chunk.

    Exactly floor(N/2) uniformly chosen tiles get weight 1.0; the rest draw
    independently from Uniform(1, 2). Deterministic for a given generator
    state.
    """
    n = grid.n_tiles
    n_flat = n // 2
    order = rng.permutation(n)
    high = rng.uniform(1.0, 2.0, size=n - n_flat)
    weights = [1.0] * n
    for j, tile in enumerate(order[n_flat:]):
        weights[tile] = float(high[j])
    return weights
