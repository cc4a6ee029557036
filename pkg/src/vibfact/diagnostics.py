"""Component selection, time-profile spectra, SBI, and noise maps.

The most impulsive extracted component is picked by sample skewness of
the time profiles.  Its cyclic content is then scored by the
spectrum-based indicator (SBI): the sum of squared magnitudes at the
fault-frequency harmonics over the total one-sided non-DC spectral
magnitude of the profile.  Sweeping the noise level and stacking the
selected profiles column-wise gives the frequency/time noise maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ProfileSpectrum:
    """One-sided magnitude spectrum of a (mean-removed) time profile."""

    freqs: np.ndarray
    mags: np.ndarray


@dataclass
class DiagnosticReport:
    """Outcome of one NMF/NTF detection run."""

    method: str
    beta: float
    selected_component: int
    skewness: list[float]
    sbi: float
    harmonic_mags: list[float]
    fault_freq: float
    frame_rate: float
    spectrum: ProfileSpectrum
    freq_profile: np.ndarray
    time_profile: np.ndarray
    fold_weights: np.ndarray | None = None  # exported, not analyzed further
    stages: list[str] = field(default_factory=list)


@dataclass
class NoiseMap:
    """Per-column max-normalized profile matrix across an SNR sweep.

    Columns are ordered by decreasing SNR; ``labels`` holds
    ``(sigma, snr_db)`` per column.
    """

    values: np.ndarray
    labels: list[tuple[float, float]]
    axis: np.ndarray
    axis_unit: str


def skewness(x: np.ndarray) -> float:
    """Fisher-Pearson coefficient ``m3 / m2^(3/2)``; 0 for zero variance."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 3:
        raise ValueError(f"need a 1-D vector of length >= 3, got shape {x.shape}")
    centered = x - x.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        return 0.0
    m3 = float(np.mean(centered**3))
    return m3 / m2**1.5


def select_component(h: np.ndarray) -> int:
    """Index of the time-profile column with the highest skewness.

    Ties break toward the lowest index.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] < 1:
        raise ValueError(f"expected a (frames x components) matrix, got {h.shape}")
    scores = [skewness(h[:, j]) for j in range(h.shape[1])]
    return int(np.argmax(scores))


def time_profile_spectrum(h: np.ndarray, frame_rate: float) -> ProfileSpectrum:
    """One-sided magnitude spectrum of the mean-removed profile.

    The DC bin is reported as exactly 0; frequencies are in Hz of profile
    time (i.e. the spectrogram frame rate is the sampling rate).
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1 or h.size == 0:
        raise ValueError("expected a non-empty 1-D profile")
    if frame_rate <= 0:
        raise ValueError(f"frame_rate must be positive, got {frame_rate}")
    mags = np.abs(np.fft.rfft(h - h.mean()))
    mags[0] = 0.0
    freqs = np.fft.rfftfreq(h.size, d=1.0 / frame_rate)
    return ProfileSpectrum(freqs=freqs, mags=mags)


def harmonic_magnitudes(spectrum: ProfileSpectrum, fault_freq: float, m1: int = 6) -> np.ndarray:
    """Peak magnitude within +-1 bin of each of the first ``m1`` harmonics."""
    freqs, mags = spectrum.freqs, spectrum.mags
    if mags.size < 2:
        raise ValueError("spectrum has no non-DC bins")
    if fault_freq <= 0 or m1 < 1:
        raise ValueError("fault_freq and m1 must be positive")
    df = freqs[1] - freqs[0]
    out = np.empty(m1)
    for i in range(1, m1 + 1):
        target = i * fault_freq
        if target > freqs[-1]:
            raise ValueError(
                f"harmonic {i} at {target} Hz is beyond the profile Nyquist "
                f"{freqs[-1]:.3f} Hz"
            )
        k = int(round(target / df))
        lo = max(1, k - 1)
        hi = min(mags.size - 1, k + 1)
        out[i - 1] = mags[lo:hi + 1].max()
    return out


def sbi(spectrum: ProfileSpectrum, fault_freq: float, m1: int = 6) -> float:
    """Sum of squared harmonic magnitudes over total non-DC magnitude.

    The numerator squares the harmonic peaks while the denominator sums
    plain magnitudes, so the indicator scales linearly with the spectrum;
    compare values only between equally scaled profiles.  Returns 0 for
    an all-zero spectrum.
    """
    ais = harmonic_magnitudes(spectrum, fault_freq, m1)
    denom = float(spectrum.mags[1:].sum())
    if denom == 0.0:
        return 0.0
    return float(np.sum(ais**2)) / denom


def build_noise_maps(
    cases,
    freq_axis: np.ndarray | None = None,
    time_axis: np.ndarray | None = None,
) -> tuple[NoiseMap, NoiseMap]:
    """Stack selected profiles from an SNR sweep into two noise maps.

    ``cases`` is a sequence of ``(sigma, snr_db, freq_profile, time_profile)``
    tuples.  Columns are sorted by decreasing SNR and individually scaled
    to unit maximum (all-zero columns stay zero).
    """
    cases = list(cases)
    if not cases:
        raise ValueError("need at least one sweep case")
    order = sorted(range(len(cases)), key=lambda i: -cases[i][1])
    n_freq = len(cases[0][2])
    n_time = len(cases[0][3])
    for sigma, _, w_col, h_col in cases:
        if len(w_col) != n_freq or len(h_col) != n_time:
            raise ValueError(f"inconsistent profile lengths in case sigma={sigma}")
    freq_vals = np.empty((n_freq, len(cases)))
    time_vals = np.empty((n_time, len(cases)))
    labels = []
    for col, i in enumerate(order):
        sigma, snr_db, w_col, h_col = cases[i]
        freq_vals[:, col] = _max_normalize(np.asarray(w_col, dtype=np.float64))
        time_vals[:, col] = _max_normalize(np.asarray(h_col, dtype=np.float64))
        labels.append((float(sigma), float(snr_db)))
    if freq_axis is None:
        freq_axis = np.arange(n_freq, dtype=np.float64)
    if time_axis is None:
        time_axis = np.arange(n_time, dtype=np.float64)
    return (
        NoiseMap(values=freq_vals, labels=labels, axis=np.asarray(freq_axis), axis_unit="Hz"),
        NoiseMap(values=time_vals, labels=list(labels), axis=np.asarray(time_axis), axis_unit="s"),
    )


def _max_normalize(col: np.ndarray) -> np.ndarray:
    peak = col.max()
    return col / peak if peak > 0 else col
