"""Cross-subcarrier CSI ratios and the band-ratio quality metric.

Dividing the CSI at one subcarrier by the CSI at another cancels every
impairment that is common to both: the carrier phase walk drops out exactly,
sampling-clock slope reduces to a constant offset (it scales with the
physical index difference), and perfectly correlated impulse amplitudes
cancel sample-by-sample. What survives is a ratio of two circles in the
complex plane that still carries the respiration motion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    SingularRatioError,
    StreamGuardError,
)
from .simulate import CsiFrame, frames_to_matrix

# Respiration band: 10.02 to 30 breaths per minute.
BAND_LOW_HZ = 0.167
BAND_HIGH_HZ = 0.5

# Fraction of flagged denominator samples above which a stream is rejected.
MAX_GUARDED_FRACTION = 0.10

# Out-of-band energy below this fraction of total is indistinguishable from
# windowing leakage; the band ratio is then reported as infinite.
LEAKAGE_FLOOR_FRACTION = 1e-6


# ----------------------------------------------------------------------------
# Ratio construction
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CscrStream:
    """A cross-subcarrier ratio series.

    ``numerator`` is a tuple of (complex weight, subcarrier index) pairs; a
    plain two-subcarrier ratio has the single entry ((1+0j, m1),).
    ``interpolated`` marks samples whose denominator failed the guard and
    were filled by linear interpolation.
    """

    values: np.ndarray
    sample_rate_hz: float
    numerator: tuple[tuple[complex, int], ...]
    denominator: int
    interpolated: np.ndarray


def guarded_ratio(
    numerator: np.ndarray,
    denominator: np.ndarray,
    guard_rel: float = 1e-9,
    max_flagged: float = MAX_GUARDED_FRACTION,
) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise ratio with near-zero denominators interpolated over.

    Samples where |denominator| falls below ``guard_rel`` times the median
    denominator magnitude are flagged and replaced by linear interpolation of
    the surrounding valid ratio samples (edges clamp to the nearest valid
    sample). Raises StreamGuardError when more than ``max_flagged`` of the
    stream is flagged.
    """
    mag = np.abs(denominator)
    floor = guard_rel * np.median(mag)
    bad = mag <= floor
    if np.all(bad):
        raise StreamGuardError("denominator is zero throughout the stream")
    if np.mean(bad) > max_flagged:
        raise StreamGuardError(
            f"{np.mean(bad):.1%} of denominator samples failed the guard "
            f"(limit {max_flagged:.0%})"
        )
    values = np.empty_like(numerator, dtype=complex)
    good = ~bad
    values[good] = numerator[good] / denominator[good]
    if np.any(bad):
        idx = np.arange(values.size)
        values[bad] = np.interp(idx[bad], idx[good], values[good].real) + 1j * np.interp(
            idx[bad], idx[good], values[good].imag
        )
    return values, bad


def cscr(
    frames: list[CsiFrame],
    numerator_index: int,
    denominator_index: int,
    sample_rate_hz: float,
    guard_rel: float = 1e-9,
) -> CscrStream:
    """Ratio of the CSI at two grid positions, one sample per frame."""
    if numerator_index == denominator_index:
        raise ConfigurationError("numerator and denominator subcarriers must differ")
    h = frames_to_matrix(frames)
    values, bad = guarded_ratio(h[numerator_index], h[denominator_index], guard_rel)
    return CscrStream(
        values=values,
        sample_rate_hz=sample_rate_hz,
        numerator=((1 + 0j, numerator_index),),
        denominator=denominator_index,
        interpolated=bad,
    )


def average_phase_blocks(frames: list[CsiFrame], block_size: int) -> list[CsiFrame]:
    """Average unwrapped phase (and magnitude) over blocks of ``block_size``.

    Packet-boundary jitter is zero-mean per frame, so block-averaging the
    phase suppresses it by ~1/sqrt(block_size) before ratios are formed.
    Output has floor(K / block_size) frames; a trailing partial block is
    dropped. ``block_size`` = 1 returns the input unchanged.
    """
    if block_size < 1:
        raise ConfigurationError("block_size must be >= 1")
    if block_size == 1:
        return list(frames)
    n_blocks = len(frames) // block_size
    if n_blocks == 0:
        raise ConfigurationError("fewer frames than one block")
    h = frames_to_matrix(frames)[:, : n_blocks * block_size]
    phase = np.unwrap(np.angle(h), axis=1)
    mag = np.abs(h)
    shape = (h.shape[0], n_blocks, block_size)
    mean_phase = phase.reshape(shape).mean(axis=2)
    mean_mag = mag.reshape(shape).mean(axis=2)
    averaged = mean_mag * np.exp(1j * mean_phase)
    times = np.array([f.time_s for f in frames[: n_blocks * block_size]])
    block_times = times.reshape(n_blocks, block_size).mean(axis=1)
    grid = frames[0].grid
    return [
        CsiFrame(index=j, time_s=block_times[j], values=averaged[:, j], grid=grid)
        for j in range(n_blocks)
    ]


# ----------------------------------------------------------------------------
# Moebius decomposition of the ratio
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MobiusDecomposition:
    """Static/dynamic split of a ratio (a z + b) / (c z + d) on |z| = 1.

    In the low-noise regime the split is exact:
        static  = a / c
        dynamic = (b c - a d) / c^2 * 1 / (z + d / c)
    and static + dynamic reconstructs the ratio identically. In the
    high-noise regime the denominator is dominated by its static term, so
        static  = b / d
        dynamic = (a / d) z
    which is a pure circle of radius |a / d|.
    """

    a: complex
    b: complex
    c: complex
    d: complex
    z: np.ndarray
    regime: str
    static_term: complex
    dynamic_term: np.ndarray

    def reconstructed(self) -> np.ndarray:
        return self.static_term + self.dynamic_term


def mobius_decompose(
    a: complex,
    b: complex,
    c: complex,
    d: complex,
    z: np.ndarray,
    regime: str = "low_noise",
    pole_rel_tol: float = 1e-9,
) -> MobiusDecomposition:
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(np.abs(z) - 1.0) > 1e-9):
        raise ConfigurationError("z must lie on the unit circle")
    if regime == "low_noise":
        if c == 0:
            raise SingularRatioError("c = 0: low-noise split undefined")
        pole_distance = np.abs(c * z + d)
        bad = pole_distance < pole_rel_tol * (abs(c) + abs(d))
        if np.any(bad):
            k = int(np.argmax(bad))
            raise SingularRatioError(f"ratio pole at sample k={k}: |c z + d| ~ 0")
        static = a / c
        dynamic = (b * c - a * d) / c**2 / (z + d / c)
    elif regime == "high_noise":
        if d == 0:
            raise SingularRatioError("d = 0: high-noise split undefined")
        static = b / d
        dynamic = (a / d) * z
    else:
        raise ConfigurationError(f"unknown regime {regime!r}")
    return MobiusDecomposition(
        a=a, b=b, c=c, d=d, z=z, regime=regime,
        static_term=static, dynamic_term=dynamic,
    )


def ratio_phase_split(decomposition: MobiusDecomposition) -> np.ndarray:
    """angle(static) - angle(dynamic) per sample for a decomposed ratio."""
    if np.any(decomposition.dynamic_term == 0):
        raise SingularRatioError("dynamic term vanishes; phase split undefined")
    return np.angle(decomposition.static_term) - np.angle(decomposition.dynamic_term)


def dynamic_amplitude_low_noise(
    static_amp_1: float,
    dynamic_amp_1: float,
    static_amp_2: float,
    dynamic_amp_2: float,
    path_offset_m: float,
    wavelength_1_m: float,
    wavelength_2_m: float,
) -> float:
    """Closed-form dynamic-circle radius of a low-noise two-subcarrier ratio.

    ``path_offset_m`` is the base dynamic path length minus the static path
    length. The radius grows with the wavelength (frequency) separation of
    the pair, which is why distant subcarrier pairs carry a stronger motion
    signal.
    """
    den = abs(static_amp_2**2 - dynamic_amp_2**2)
    if den == 0:
        raise SingularRatioError("equal static and dynamic amplitudes: radius undefined")
    beat = (wavelength_1_m - wavelength_2_m) / (wavelength_1_m * wavelength_2_m)
    num = abs(
        static_amp_1 * dynamic_amp_2 * np.exp(-2j * np.pi * path_offset_m * beat)
        - dynamic_amp_1 * static_amp_2
    )
    return num / den


# ----------------------------------------------------------------------------
# Band-ratio quality metric
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SsnrEstimate:
    """In-band to out-of-band energy ratio of a series.

    ``value`` is inf when out-of-band energy sits at the windowing leakage
    floor, and 0.0 (with ``zero_signal``) for an all-zero input.
    """

    value: float
    band_energy: float
    out_of_band_energy: float
    infinite: bool = False
    zero_signal: bool = False


def band_energies(
    series: np.ndarray, sample_rate_hz: float
) -> tuple[np.ndarray, np.ndarray]:
    """In-band and out-of-band spectral energy for each row of ``series``.

    Rows are mean-removed, Hann-windowed, and zero-padded to the next power
    of two at least 4x the row length. Band membership is decided by |f|:
    the respiration band is [0.167, 0.5] Hz, out-of-band is everything above
    0.5 Hz up to Nyquist, and the DC bin is excluded from both.
    """
    x = np.atleast_2d(np.asarray(series))
    n = x.shape[1]
    if n < 2:
        raise ConfigurationError("series too short for a spectrum")
    x = x - x.mean(axis=1, keepdims=True)
    window = np.hanning(n)
    nfft = 1 << int(np.ceil(np.log2(4 * n)))
    spectrum = np.fft.fft(x * window, n=nfft, axis=1)
    power = np.abs(spectrum) ** 2
    freq = np.abs(np.fft.fftfreq(nfft, d=1.0 / sample_rate_hz))
    in_band = (freq >= BAND_LOW_HZ) & (freq <= BAND_HIGH_HZ)
    out_band = freq > BAND_HIGH_HZ
    return power[:, in_band].sum(axis=1), power[:, out_band].sum(axis=1)


def ssnr(
    series: np.ndarray,
    sample_rate_hz: float,
    leakage_floor: float = LEAKAGE_FLOOR_FRACTION,
) -> SsnrEstimate:
    """Band ratio of a single series (complex or real).

    Requires at least 2 seconds of samples so the band edges are resolvable.
    """
    series = np.asarray(series)
    if series.ndim != 1:
        raise ConfigurationError("ssnr expects a 1-D series")
    if series.size < 2 * sample_rate_hz:
        raise ConfigurationError("series must cover at least 2 seconds")
    band, out = band_energies(series, sample_rate_hz)
    band_e, out_e = float(band[0]), float(out[0])
    total = band_e + out_e
    if total == 0.0:
        return SsnrEstimate(0.0, 0.0, 0.0, zero_signal=True)
    if out_e < leakage_floor * total:
        return SsnrEstimate(float("inf"), band_e, out_e, infinite=True)
    return SsnrEstimate(band_e / out_e, band_e, out_e)


def ssnr_values(
    series: np.ndarray,
    sample_rate_hz: float,
    leakage_floor: float = LEAKAGE_FLOOR_FRACTION,
) -> np.ndarray:
    """Vectorized band ratios for each row; inf at the leakage floor, 0 for
    all-zero rows."""
    band, out = band_energies(series, sample_rate_hz)
    total = band + out
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(out > 0, band / np.where(out > 0, out, 1.0), np.inf)
    values = np.where(out < leakage_floor * total, np.inf, values)
    return np.where(total == 0.0, 0.0, values)
