"""Download and playback timeline.

Chunks download back to back; chunk k plays once it is both downloaded and
the previous chunk has finished playing. Playback starts when chunk 1 is
shown, so chunk 1 is treated as pre-buffered: download start, first play
time, and chunk 2's download start are all time zero, and the first stall is
zero by definition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .channel import link_rate_mbps


@dataclass(frozen=True)
class Timeline:
    """Value-type playback state between chunks.

    t is the download start of the next chunk, t_play_prev the play time of
    the last chunk handled, k the index of the next chunk to advance with.
    Stalls are nonnegative and the play times are spaced at least one chunk
    duration apart.
    """

    t: float = 0.0
    t_play_prev: float = 0.0
    k: int = 2
    total_stall: float = 0.0
    per_chunk_stall: tuple[float, ...] = (0.0,)

    @classmethod
    def initial(cls) -> "Timeline":
        return cls()


def advance(tl: Timeline, size_mbit: float, mode_bits: int, bandwidth: float,
            duration: float) -> tuple[Timeline, float]:
    """Account for downloading and playing one chunk.

    Download takes size / (bits-per-symbol * symbol rate) seconds; the chunk
    plays at max(previous play + duration, download finish); the stall is
    whatever that pushes beyond the nominal duration spacing.
    """
    if tl.k < 2:
        raise ValueError("chunk 1 is pre-buffered; advance starts at chunk 2")
    if size_mbit < 0.0:
        raise ValueError("chunk size must be nonnegative")
    rate = link_rate_mbps(mode_bits, bandwidth)
    if not rate > 0.0:
        raise ValueError("download rate must be positive")
    d = size_mbit / rate
    finish = tl.t + d
    t_play = max(tl.t_play_prev + duration, finish)
    stall = t_play - tl.t_play_prev - duration
    new = Timeline(
        t=finish,
        t_play_prev=t_play,
        k=tl.k + 1,
        total_stall=tl.total_stall + stall,
        per_chunk_stall=tl.per_chunk_stall + (stall,),
    )
    return new, stall


def download_carry(sizes_mbit: Sequence[float], modes: Sequence[int],
                   stalls: Sequence[float], bandwidth: float,
                   duration: float) -> float:
    """Accumulated download debt, in seconds, of a decided chunk history.

    Each past chunk contributes its download time minus its stall minus one
    chunk duration; a positive carry means the buffer is behind schedule.
    The history covers chunks 2..k-1 (chunk 1 costs nothing to download).
    """
    if not len(sizes_mbit) == len(modes) == len(stalls):
        raise ValueError("history sequences must have equal length")
    carry = 0.0
    for size, mode, stall in zip(sizes_mbit, modes, stalls):
        carry += size / link_rate_mbps(mode, bandwidth) - stall - duration
    return carry


def stall_closed_form(sizes_mbit: Sequence[float], modes: Sequence[int],
                      bandwidth: float, duration: float,
                      prior_stalls: Sequence[float]) -> float:
    """Stall of chunk k from the whole history, without replaying the
    recursion.

    sizes_mbit and modes cover chunks 2..k; prior_stalls covers chunks
    2..k-1. Equals max(0, carry of chunks 2..k-1 plus chunk k's download
    time minus one duration), and exists mainly as a cross-check oracle for
    advance().
    """
    if len(sizes_mbit) != len(modes):
        raise ValueError("sizes and modes must have equal length")
    if len(prior_stalls) != len(sizes_mbit) - 1:
        raise ValueError("prior_stalls must cover all chunks but the last")
    carry = download_carry(sizes_mbit[:-1], modes[:-1], prior_stalls,
                           bandwidth, duration)
    d_last = sizes_mbit[-1] / link_rate_mbps(modes[-1], bandwidth)
    return max(0.0, carry + d_last - duration)
