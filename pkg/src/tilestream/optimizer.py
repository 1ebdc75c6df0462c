"""Per-chunk rate optimization: continuous relaxation of the discrete-rate
QoE problem, then rounding back onto the ladder by saliency priority.

The objective for one chunk is weighted quality of the viewport tiles minus
a stall penalty. With rates relaxed to the continuous box [R_min, R_max] the
problem is concave: the stall is a hinge of the rate sum, so the optimum is
found by solving both hinge regimes and keeping the better one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .channel import link_rate_mbps
from .video import QualityParams, RateLadder, TileGrid

_BISECT_ITERS = 200
_BISECT_REL_WIDTH = 1e-10
_HINGE_TOL = 1e-9


@dataclass(frozen=True)
class ChunkContext:
    """Everything the per-chunk solve needs.

    fov_weights are the saliency weights of the predicted viewport tiles in
    ascending tile-id order. link_mbps is the download rate of the selected
    modulation. slack is the constant part of the stall hinge in seconds:
    accumulated download debt, minus one chunk duration, plus the fixed cost
    of shipping every non-viewport tile at the lowest ladder rate. The stall
    predicted for viewport rates R is max(0, slack + (duration/link_mbps) *
    sum(R)).
    """

    fov_weights: tuple[float, ...]
    ladder: RateLadder
    params: QualityParams
    stall_weight: float
    link_mbps: float
    duration: float
    slack: float

    def __post_init__(self):
        object.__setattr__(self, "fov_weights",
                           tuple(float(w) for w in self.fov_weights))
        if not self.fov_weights:
            raise ValueError("need at least one viewport tile")
        if any(w <= 0.0 for w in self.fov_weights):
            raise ValueError("saliency weights must be positive")
        if not self.stall_weight > 0.0:
            raise ValueError("stall_weight must be positive")
        if not self.link_mbps > 0.0:
            raise ValueError("link_mbps must be positive")
        if not self.duration > 0.0:
            raise ValueError("duration must be positive")
        if not math.isfinite(self.slack):
            raise ValueError("slack must be finite")


@dataclass(frozen=True)
class RelaxedSolution:
    """Optimum of the continuous relaxation: per-tile rates inside the box,
    the objective value, and the stall the hinge predicts for them."""

    rates: tuple[float, ...]
    objective: float
    stall: float


def stall_slack(carry: float, mode_bits: int, bandwidth: float,
                duration: float, grid: TileGrid, ladder: RateLadder) -> float:
    """Constant part of chunk k's stall hinge, in seconds.

    carry is the accumulated download debt of chunks 2..k-1 (see
    timeline.download_carry). On top of it the chunk pays for every tile
    outside the predicted viewport at the lowest ladder rate, and earns one
    chunk duration of playback.
    """
    mbps = link_rate_mbps(mode_bits, bandwidth)
    base = grid.n_tiles - grid.fov_tiles
    return carry - duration + duration * base * ladder.r_min / mbps


def predicted_stall(ctx: ChunkContext, fov_rates: Sequence[float]) -> float:
    """Stall the hinge predicts for a candidate viewport rate vector."""
    return max(0.0, ctx.slack + ctx.duration / ctx.link_mbps * sum(fov_rates))


def relaxed_objective(ctx: ChunkContext, fov_rates: Sequence[float]) -> float:
    """True objective (weighted quality minus stall penalty) of any viewport
    rate vector, discrete or continuous."""
    a, b = ctx.params.a, ctx.params.b
    utility = 0.0
    for w, r in zip(ctx.fov_weights, fov_rates):
        if r > 0.0:
            utility += w * a * r ** b
    return utility - ctx.stall_weight * predicted_stall(ctx, fov_rates)


def _waterfill(ctx: ChunkContext, budget: float) -> list[float]:
    """Maximize weighted quality subject to sum(rates) <= budget on the box.

    Each tile's marginal quality w*a*b*r**(b-1) is equated to a shared
    multiplier, clipped to the box; the multiplier is found by bisection.
    """
    w = ctx.fov_weights
    a, b = ctx.params.a, ctx.params.b
    r1, rmax = ctx.ladder.r_min, ctx.ladder.r_max
    m = len(w)
    if budget >= m * rmax:
        return [rmax] * m
    exp = 1.0 / (b - 1.0)

    def rates_at(mu: float) -> list[float]:
        return [min(rmax, max(r1, (mu / (wi * a * b)) ** exp)) for wi in w]

    # mu below lo pushes every tile to rmax, above hi pins every tile at r1
    lo = a * b * min(w) * rmax ** (b - 1.0)
    hi = a * b * max(w) * r1 ** (b - 1.0)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if sum(rates_at(mid)) > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BISECT_REL_WIDTH * hi:
            break
    return rates_at(0.5 * (lo + hi))


def solve_relaxed(ctx: ChunkContext) -> RelaxedSolution:
    """Globally maximize the relaxed per-chunk objective over the rate box.

    Regime A assumes the stall hinge stays inactive, turning the problem
    into quality maximization under the rate-sum budget that keeps the hinge
    at or below zero. Regime B assumes the hinge is active, which makes the
    penalty linear and the problem separable per tile. Both candidates are
    scored with the true hinged objective and the better one wins; a
    candidate whose hinge assumption was wrong can never outscore the
    regime that got it right, so this returns the global optimum.
    """
    w = ctx.fov_weights
    a, b = ctx.params.a, ctx.params.b
    r1, rmax = ctx.ladder.r_min, ctx.ladder.r_max
    m = len(w)

    candidates: list[list[float]] = []

    budget = -ctx.slack * ctx.link_mbps / ctx.duration
    if budget >= m * r1 - _HINGE_TOL:
        candidates.append(_waterfill(ctx, budget))

    # hinge active: per-tile stationary point of w*a*r**b - price*r
    price = ctx.stall_weight * ctx.duration / ctx.link_mbps
    exp = 1.0 / (1.0 - b)
    candidates.append(
        [min(rmax, max(r1, (wi * a * b / price) ** exp)) for wi in w])

    best_rates: list[float] | None = None
    best_obj = -math.inf
    for rates in candidates:
        obj = relaxed_objective(ctx, rates)
        if obj > best_obj:
            best_obj = obj
            best_rates = rates
    assert best_rates is not None
    return RelaxedSolution(rates=tuple(best_rates), objective=best_obj,
                           stall=predicted_stall(ctx, best_rates))


def round_rates(relaxed: Sequence[float], weights: Sequence[float],
                ladder: RateLadder, *, reuse_stranded_budget: bool = False) -> tuple[float, ...]:
    """Round relaxed viewport rates onto the ladder by saliency priority.

    Every rate is floored to the ladder; the total amount shaved off becomes
    an upgrade budget. Tiles are then visited in decreasing weight order
    (ties broken by lower tile index) and raised one ladder level each while
    the budget allows; the first unaffordable upgrade stops the pass. With
    reuse_stranded_budget the pass skips unaffordable tiles instead of
    stopping, so cheaper lower-priority upgrades can still spend leftovers.
    """
    if len(relaxed) != len(weights):
        raise ValueError("rates and weights must have equal length")
    floors = [ladder.floor(r) for r in relaxed]
    ceils = [ladder.ceil(r) for r in relaxed]
    budget = 0.0
    for r, f in zip(relaxed, floors):
        budget += r - f
    rates = list(floors)
    if budget == 0.0:
        return tuple(rates)
    order = sorted(range(len(weights)), key=lambda i: (-weights[i], i))
    for i in order:
        budget -= ceils[i] - floors[i]
        if budget >= 0.0:
            rates[i] = ceils[i]
        elif reuse_stranded_budget:
            budget += ceils[i] - floors[i]
        else:
            break
    return tuple(rates)
