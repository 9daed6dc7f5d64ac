"""Gain/rotation alignment and weighted summation of ratio streams.

Every stream carries the same chest motion but with its own static offset,
amplitude scale, and rotation in the complex plane. Alignment removes the
offset, normalizes by a sliding-window gain estimate, and rotates each
stream onto the best one before a quality-weighted sum. Streams whose band
ratio falls below a fraction mu of the best stream's are dropped; the best
stream itself always survives (the threshold is inclusive).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, ConfigurationError
from .ratio import CscrStream, ssnr_values

logger = logging.getLogger(__name__)

# Streams at the leakage floor report an infinite band ratio; cap it so the
# weighted sum stays finite (the cap only matters in near-noise-free runs
# where every surviving stream saturates anyway).
INFINITE_WEIGHT_CAP = 1e12


@dataclass
class AlignedStream:
    """One ratio stream with its alignment byproducts."""

    stream: CscrStream
    offset_removed: np.ndarray       # Q: values minus their mean
    gain: float                      # G: max sliding-window mean magnitude
    normalized: np.ndarray           # V: Q scaled by the gain
    band_ratio: float                # beta
    rotation: float = 0.0            # Theta, radians onto the reference
    final_weight: float = 0.0        # gamma, set by combine()


@dataclass(frozen=True)
class CombinedSignal:
    values: np.ndarray               # weighted aligned sum
    smoothed: np.ndarray             # after the moving average
    sample_rate_hz: float
    smoothed_rate_hz: float
    smoothing_window: int
    smoothing_mode: str
    reference_denominator: int
    contributing: int


def remove_offset(values: np.ndarray) -> np.ndarray:
    """Subtract the mean so only the motion-driven excursion remains."""
    return values - values.mean()


def stream_gain(offset_removed: np.ndarray, gain_window: int) -> float:
    """Largest magnitude of the sliding ``gain_window``-sample mean.

    Windows shorter than ``gain_window`` (series shorter than the window)
    fall back to the full-series mean magnitude.
    """
    if gain_window < 1:
        raise ConfigurationError("gain window must be >= 1")
    q = np.asarray(offset_removed)
    if q.size < gain_window:
        return float(np.abs(q.mean()))
    csum = np.cumsum(np.concatenate([[0.0 + 0.0j], q]))
    means = (csum[gain_window:] - csum[:-gain_window]) / gain_window
    return float(np.max(np.abs(means)))


def align_rotation(reference: np.ndarray, values: np.ndarray) -> float:
    """Rotation minimizing sum |reference - values * exp(j theta)|^2.

    Closed form: the angle of the inner product <reference, values>.
    """
    inner = np.sum(reference * np.conj(values))
    if inner == 0:
        raise AlignmentError("zero inner product: rotation undefined")
    return float(np.angle(inner))


def moving_average(values: np.ndarray, window: int, mode: str = "sliding") -> np.ndarray:
    """Smooth a series over ``window`` samples.

    sliding: centered, length-preserving, edges averaged over the samples
    actually available. block: non-overlapping block means, length
    floor(K / window), which decimates the series.
    """
    if window < 1:
        raise ConfigurationError("smoothing window must be >= 1")
    v = np.asarray(values)
    if window == 1:
        return v.copy()
    if mode == "sliding":
        kernel = np.ones(window)
        summed = np.convolve(v, kernel, mode="same")
        counts = np.convolve(np.ones(v.size), kernel, mode="same")
        return summed / counts
    if mode == "block":
        n_blocks = v.size // window
        if n_blocks == 0:
            raise ConfigurationError("series shorter than one smoothing block")
        return v[: n_blocks * window].reshape(n_blocks, window).mean(axis=1)
    raise ConfigurationError(f"unknown smoothing mode {mode!r}")


def align_streams(
    streams: list[CscrStream],
    gain_window: int,
    gain_normalization: str = "divide",
) -> list[AlignedStream]:
    """Offset-remove, gain-normalize, and rotate streams onto the best one.

    The reference is the stream with the highest band ratio. Streams with
    zero gain or an undefined rotation are dropped with a log record.
    ``gain_normalization`` selects V = Q / G ("divide", the default, which
    equalizes stream excursions) or V = Q * G ("multiply", which boosts
    already-strong streams instead).
    """
    if gain_normalization not in ("divide", "multiply"):
        raise ConfigurationError("gain_normalization must be 'divide' or 'multiply'")
    if not streams:
        raise ConfigurationError("no streams to align")
    rates = {s.sample_rate_hz for s in streams}
    if len(rates) != 1:
        raise ConfigurationError("streams must share one sample rate")
    sample_rate = rates.pop()

    betas = ssnr_values(np.array([s.values for s in streams]), sample_rate)
    aligned: list[AlignedStream] = []
    for stream, beta in zip(streams, betas):
        q = remove_offset(stream.values)
        g = stream_gain(q, gain_window)
        if g == 0.0:
            logger.warning("dropping constant stream (denominator %d)", stream.denominator)
            continue
        normalized = q / g if gain_normalization == "divide" else q * g
        aligned.append(
            AlignedStream(
                stream=stream,
                offset_removed=q,
                gain=g,
                normalized=normalized,
                band_ratio=float(beta),
            )
        )
    if not aligned:
        raise ConfigurationError("every stream was degenerate")

    reference = max(range(len(aligned)), key=lambda i: aligned[i].band_ratio)
    ref_values = aligned[reference].normalized
    kept: list[AlignedStream] = []
    for i, a in enumerate(aligned):
        if i == reference:
            a.rotation = 0.0
            kept.append(a)
            continue
        try:
            a.rotation = align_rotation(ref_values, a.normalized)
        except AlignmentError:
            logger.warning(
                "dropping unalignable stream (denominator %d)", a.stream.denominator
            )
            continue
        kept.append(a)
    return kept


def combine(
    aligned: list[AlignedStream],
    smoothing_window: int,
    mu: float = 0.5,
    smoothing_mode: str = "sliding",
) -> CombinedSignal:
    """Quality-weighted sum of aligned streams plus a moving average.

    A stream survives when its band ratio is at least ``mu`` times the best
    stream's (inclusive, so the best stream always contributes). Surviving
    streams are weighted by their band ratio.
    """
    if not aligned:
        raise ConfigurationError("no aligned streams to combine")
    if not 0.0 <= mu <= 1.0:
        raise ConfigurationError("mu must lie in [0, 1]")
    betas = np.array([a.band_ratio for a in aligned])
    capped = np.minimum(betas, INFINITE_WEIGHT_CAP)
    best = capped.max()
    survivors = capped >= mu * best
    total = np.zeros_like(aligned[0].normalized)
    contributing = 0
    reference_denominator = aligned[int(np.argmax(betas))].stream.denominator
    for a, keep, weight in zip(aligned, survivors, capped):
        a.final_weight = float(weight) if keep else 0.0
        if keep:
            total = total + a.final_weight * a.normalized * np.exp(1j * a.rotation)
            contributing += 1
    sample_rate = aligned[0].stream.sample_rate_hz
    smoothed = moving_average(total, smoothing_window, smoothing_mode)
    smoothed_rate = (
        sample_rate if smoothing_mode == "sliding" else sample_rate / smoothing_window
    )
    return CombinedSignal(
        values=total,
        smoothed=smoothed,
        sample_rate_hz=sample_rate,
        smoothed_rate_hz=smoothed_rate,
        smoothing_window=smoothing_window,
        smoothing_mode=smoothing_mode,
        reference_denominator=reference_denominator,
        contributing=contributing,
    )
