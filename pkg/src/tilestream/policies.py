"""Per-chunk rate-selection strategies behind one interface, plus realized
QoE accounting.

All strategies consume the same inputs and emit a full per-tile rate vector:

* main: relaxed solve plus priority rounding on the predicted viewport,
  lowest ladder rate everywhere else.
* baseline: one flat rate for every tile, the highest that downloads within
  one chunk duration.
* greedy: a one-tile-margin expansion of the predicted viewport at the
  highest flat rate that fits, all remaining tiles unsent.
* main-qpsk: main with the modulation pinned to QPSK (applied by the caller
  through the mode argument).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .channel import Modulation
from .optimizer import ChunkContext, predicted_stall, round_rates, solve_relaxed
from .video import QualityParams, RateLadder, TileGrid, Window

POLICY_NAMES: tuple[str, ...] = ("main", "baseline", "greedy", "main-qpsk")


@dataclass(frozen=True)
class ChunkDecision:
    """Per-tile delivered rates for one chunk (0 marks an unsent tile), the
    modulation used, and the stall the policy expected to cause."""

    rates: tuple[float, ...]
    mode: Modulation
    predicted_stall: float

    def __post_init__(self):
        if any(r < 0.0 for r in self.rates):
            raise ValueError("tile rates must be nonnegative")


@dataclass(frozen=True)
class QoEReport:
    """Realized per-chunk outcome: quality over the tiles actually viewed,
    the realized stall, their weighted difference, and that difference
    normalized by the stall-free all-top-rate quality of the same view."""

    quality: float
    stall: float
    qoe: float
    qoe_normalized: float


def _carry_from_slack(ctx: ChunkContext, grid: TileGrid, ladder: RateLadder) -> float:
    # invert stall_slack: strip the one-duration credit and the non-viewport
    # base load back out of the hinge constant
    base = grid.n_tiles - grid.fov_tiles
    return ctx.slack + ctx.duration - ctx.duration * base * ladder.r_min / ctx.link_mbps


def _flat_rate_fitting(n_tiles: int, ctx: ChunkContext, ladder: RateLadder) -> float:
    """Highest ladder rate at which n_tiles download within one chunk
    duration; lowest rate if none fits."""
    best = ladder.r_min
    for level in ladder.levels:
        if n_tiles * level * ctx.duration / ctx.link_mbps <= ctx.duration:
            best = level
    return best


def main_policy(ctx: ChunkContext, window: Window, grid: TileGrid,
                mode: Modulation) -> ChunkDecision:
    """Optimized viewport rates, lowest ladder rate outside the viewport."""
    fov_tiles = grid.window(window)
    relaxed = solve_relaxed(ctx)
    fov_rates = round_rates(relaxed.rates, ctx.fov_weights, ctx.ladder)
    rates = [ctx.ladder.r_min] * grid.n_tiles
    for tile, rate in zip(fov_tiles, fov_rates):
        rates[tile] = rate
    return ChunkDecision(rates=tuple(rates), mode=mode,
                         predicted_stall=predicted_stall(ctx, fov_rates))


def baseline_policy(ctx: ChunkContext, window: Window, grid: TileGrid,
                    mode: Modulation) -> ChunkDecision:
    """Every tile at the same rate, chosen so the chunk downloads within its
    own duration."""
    rate = _flat_rate_fitting(grid.n_tiles, ctx, ctx.ladder)
    carry = _carry_from_slack(ctx, grid, ctx.ladder)
    download = grid.n_tiles * rate * ctx.duration / ctx.link_mbps
    stall = max(0.0, carry + download - ctx.duration)
    return ChunkDecision(rates=(rate,) * grid.n_tiles, mode=mode,
                         predicted_stall=stall)


def expanded_window(window: Window, grid: TileGrid) -> tuple[int, ...]:
    """Tiles of the greedy policy's enlarged viewport: one extra row and one
    extra column, anchored on the prediction, wrapped horizontally and
    clamped vertically."""
    height = min(grid.rows, grid.fov_rows + 1)
    width = min(grid.cols, grid.fov_cols + 1)
    row = min(window.row, grid.rows - height)
    return grid.window(Window(row, window.col), height, width)


def greedy_policy(ctx: ChunkContext, window: Window, grid: TileGrid,
                  mode: Modulation) -> ChunkDecision:
    """Flat-rate transmission of the enlarged predicted viewport only; every
    other tile is left unsent."""
    tiles = expanded_window(window, grid)
    rate = _flat_rate_fitting(len(tiles), ctx, ctx.ladder)
    rates = [0.0] * grid.n_tiles
    for tile in tiles:
        rates[tile] = rate
    carry = _carry_from_slack(ctx, grid, ctx.ladder)
    download = len(tiles) * rate * ctx.duration / ctx.link_mbps
    stall = max(0.0, carry + download - ctx.duration)
    return ChunkDecision(rates=tuple(rates), mode=mode, predicted_stall=stall)


PolicyFn = Callable[[ChunkContext, Window, TileGrid, Modulation], ChunkDecision]

_POLICIES: dict[str, PolicyFn] = {
    "main": main_policy,
    "baseline": baseline_policy,
    "greedy": greedy_policy,
    "main-qpsk": main_policy,
}


def decide(name: str, ctx: ChunkContext, window: Window, grid: TileGrid,
           mode: Modulation) -> ChunkDecision:
    """Dispatch a policy by name."""
    try:
        policy = _POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
    return policy(ctx, window, grid, mode)


def forces_qpsk(name: str) -> bool:
    """Whether the named policy pins the modulation to QPSK."""
    if name not in _POLICIES:
        raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
    return name == "main-qpsk"


def evaluate_chunk(decision: ChunkDecision, actual_fov: Iterable[int],
                   weights: Sequence[float], stall_weight: float,
                   realized_stall: float, params: QualityParams,
                   ladder: RateLadder) -> QoEReport:
    """Score a decision against the viewport the user actually looked at.

    Quality counts the delivered rates of the viewed tiles only; the stall
    charged is the realized one from the timeline, not the policy's
    prediction. The normalizer is what the same view would score stall-free
    with every tile at the top ladder rate.
    """
    if realized_stall < 0.0:
        raise ValueError("realized_stall must be nonnegative")
    a, b = params.a, params.b
    top = ladder.r_max ** b
    quality = 0.0
    q_max = 0.0
    for tile in actual_fov:
        w = weights[tile]
        r = decision.rates[tile]
        if r > 0.0:
            quality += w * a * r ** b
        q_max += w * a * top
    qoe = quality - stall_weight * realized_stall
    return QoEReport(quality=quality, stall=realized_stall, qoe=qoe,
                     qoe_normalized=qoe / q_max)
