"""Block-fading wireless channel with adaptive modulation.

The link gain combines a slowly varying uniform large-scale factor with a
unit-variance complex Gaussian (Rayleigh) coefficient redrawn every chunk.
The transmitter picks the densest constellation whose AWGN bit error rate at
the instantaneous SNR stays below a configured target.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_SQRT2 = math.sqrt(2.0)


def q_function(x: float) -> float:
    """Gaussian tail probability Q(x) = P(Z > x) for standard normal Z."""
    return 0.5 * math.erfc(x / _SQRT2)


class Modulation(enum.IntEnum):
    """Supported constellations; the value is the spectral efficiency in
    bits per symbol."""

    BPSK = 1
    QPSK = 2
    QAM16 = 4
    QAM64 = 6

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Modulation.BPSK: "BPSK",
    Modulation.QPSK: "QPSK",
    Modulation.QAM16: "16-QAM",
    Modulation.QAM64: "64-QAM",
}

MODES: tuple[Modulation, ...] = tuple(Modulation)


@dataclass(frozen=True)
class LinkConfig:
    """Static link parameters.

    bandwidth is the symbol rate (symbols/second); avg_snr is the linear
    mean SNR before fading (transmit power over noise in the band). The
    large-scale factor is redrawn every alpha_period seconds and the
    Rayleigh coefficient every fading_period seconds, so fading_period must
    divide alpha_period.
    """

    bandwidth: float = 20e6
    avg_snr: float = 10.0 ** 1.8
    target_ber: float = 1e-3
    alpha_range: tuple[float, float] = (0.75, 1.25)
    alpha_period: float = 40.0
    fading_period: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "alpha_range",
                           (float(self.alpha_range[0]), float(self.alpha_range[1])))
        if not self.bandwidth > 0.0:
            raise ValueError("bandwidth must be positive")
        if not self.avg_snr > 0.0:
            raise ValueError("avg_snr must be positive")
        if not 0.0 < self.target_ber < 0.5:
            raise ValueError("target_ber must lie in (0, 0.5)")
        lo, hi = self.alpha_range
        if not 0.0 < lo <= hi:
            raise ValueError("alpha_range must satisfy 0 < lo <= hi")
        if not (self.alpha_period > 0.0 and self.fading_period > 0.0):
            raise ValueError("periods must be positive")
        ratio = self.alpha_period / self.fading_period
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("fading_period must divide alpha_period")

    @property
    def chunks_per_alpha(self) -> int:
        return round(self.alpha_period / self.fading_period)

    @classmethod
    def with_snr_db(cls, avg_snr_db: float, **kwargs) -> "LinkConfig":
        return cls(avg_snr=10.0 ** (avg_snr_db / 10.0), **kwargs)


@dataclass(frozen=True)
class ChannelState:
    """One chunk's channel draw: large-scale factor, Rayleigh coefficient,
    instantaneous linear SNR, and the selected modulation."""

    alpha: float
    h_r: complex
    snr: float
    mode: Modulation


def ber(mode: Modulation, snr: float) -> float:
    """AWGN bit error rate of a Gray-coded constellation at linear symbol SNR.

    BPSK: Q(sqrt(2 snr)); QPSK: Q(sqrt(snr)); square M-QAM:
    (4/log2 M)(1 - 1/sqrt(M)) Q(sqrt(3 snr / (M - 1))).
    """
    if snr < 0.0:
        raise ValueError("snr must be nonnegative")
    if mode is Modulation.BPSK:
        return q_function(math.sqrt(2.0 * snr))
    if mode is Modulation.QPSK:
        return q_function(math.sqrt(snr))
    if mode in (Modulation.QAM16, Modulation.QAM64):
        m = 2 ** int(mode)
        scale = (4.0 / math.log2(m)) * (1.0 - 1.0 / math.sqrt(m))
        return scale * q_function(math.sqrt(3.0 * snr / (m - 1)))
    raise ValueError(f"unknown modulation {mode!r}")


@lru_cache(maxsize=None)
def snr_threshold(mode: Modulation, target_ber: float) -> float:
    """Linear SNR at which the mode's bit error rate equals target_ber.

    Found by bisection on the strictly decreasing BER curve, to a relative
    interval width of 1e-9.
    """
    if not 0.0 < target_ber < ber(mode, 0.0):
        raise ValueError(f"target_ber {target_ber} outside (0, ber at snr=0) "
                         f"for {mode.label}")
    lo, hi = 0.0, 1.0
    while ber(mode, hi) > target_ber:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("failed to bracket the BER threshold")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ber(mode, mid) > target_ber:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-9 * hi:
            break
    return 0.5 * (lo + hi)


@lru_cache(maxsize=None)
def snr_thresholds(target_ber: float) -> dict[Modulation, float]:
    """Per-mode SNR thresholds for a target BER, in mode order."""
    return {mode: snr_threshold(mode, target_ber) for mode in MODES}


def select_modulation(snr: float, cfg: LinkConfig) -> Modulation:
    """Densest mode whose threshold is at or below snr.

    Below the BPSK threshold the link falls back to BPSK anyway (every chunk
    stays transmittable; there is no retransmission layer).
    """
    thresholds = snr_thresholds(cfg.target_ber)
    selected = Modulation.BPSK
    for mode in MODES:
        if thresholds[mode] <= snr:
            selected = mode
    return selected


def link_rate_mbps(mode: Modulation | int, bandwidth: float) -> float:
    """Downlink rate in megabits/second for a spectral efficiency and symbol
    rate."""
    return int(mode) * bandwidth / 1e6


def draw_channel_state(rng: np.random.Generator, chunk_index: int,
                       cfg: LinkConfig, prev_alpha: float | None = None) -> ChannelState:
    """Draw the channel for one chunk.

    The large-scale factor is redrawn at chunks whose start crosses an
    alpha_period boundary (chunk 1, then every chunks_per_alpha chunks) and
    held otherwise; the Rayleigh coefficient is redrawn every chunk with
    independent real and imaginary parts of variance 1/2, so its squared
    magnitude is unit-mean exponential.
    """
    if chunk_index < 1:
        raise ValueError("chunk_index is 1-based")
    if prev_alpha is None or (chunk_index - 1) % cfg.chunks_per_alpha == 0:
        lo, hi = cfg.alpha_range
        alpha = float(rng.uniform(lo, hi))
    else:
        alpha = prev_alpha
    re, im = rng.standard_normal(2) * math.sqrt(0.5)
    gain = re * re + im * im
    snr = alpha * alpha * gain * cfg.avg_snr
    return ChannelState(alpha=alpha, h_r=complex(re, im), snr=snr,
                        mode=select_modulation(snr, cfg))


def mode_probabilities(cfg: LinkConfig, nodes: int = 96) -> dict[Modulation, float]:
    """Analytic probability of each mode being selected under the fading
    model.

    The squared Rayleigh magnitude is Exp(1), so conditioned on alpha the
    SNR exceeds s with probability exp(-s / (alpha^2 avg_snr)); the uniform
    alpha is integrated out with Gauss-Legendre quadrature.
    """
    lo, hi = cfg.alpha_range

    def p_snr_at_least(s: float) -> float:
        if s <= 0.0:
            return 1.0
        if hi == lo:
            return math.exp(-s / (lo * lo * cfg.avg_snr))
        x, w = np.polynomial.legendre.leggauss(nodes)
        alpha = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x
        vals = np.exp(-s / (alpha * alpha * cfg.avg_snr))
        return float(np.sum(w * vals) * 0.5)

    thresholds = snr_thresholds(cfg.target_ber)
    upper = [p_snr_at_least(thresholds[mode]) for mode in MODES]
    probs: dict[Modulation, float] = {}
    for i, mode in enumerate(MODES):
        hi_p = upper[i + 1] if i + 1 < len(MODES) else 0.0
        if i == 0:
            # the clamp folds everything below the QPSK threshold into BPSK
            probs[mode] = 1.0 - upper[i + 1]
        else:
            probs[mode] = upper[i] - hi_p
    return probs
