"""STFT squared-magnitude spectrograms and stacking into 3-way tensors.

Frames are left-aligned (frame k starts at sample ``k * hop``) and no
padding is added, so trailing samples short of a full window are dropped.
``time_axis`` reports window-center times.  Values are squared magnitudes
of the one-sided windowed DFT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window


@dataclass(frozen=True)
class StftParams:
    """Analysis parameters; defaults give 257 bins and a 28-sample hop."""

    window_len: int = 128
    overlap: int = 100
    nfft: int = 512
    window_kind: str = "hamming"
    fs: float = 25000.0

    def validate(self) -> None:
        if not 0 <= self.overlap < self.window_len <= self.nfft:
            raise ValueError(
                "need 0 <= overlap < window_len <= nfft, got "
                f"overlap={self.overlap}, window_len={self.window_len}, "
                f"nfft={self.nfft}"
            )
        if self.fs <= 0:
            raise ValueError(f"fs must be positive, got {self.fs}")

    @property
    def hop(self) -> int:
        return self.window_len - self.overlap

    @property
    def n_bins(self) -> int:
        return self.nfft // 2 + 1

    @property
    def frame_rate(self) -> float:
        return self.fs / self.hop

    def window(self) -> np.ndarray:
        # periodic convention (0.54 - 0.46 cos(2 pi n / M) for hamming)
        return get_window(self.window_kind, self.window_len, fftbins=True)

    def frame_count(self, n_samples: int) -> int:
        if n_samples < self.window_len:
            raise ValueError(
                f"signal too short: {n_samples} samples < window {self.window_len}"
            )
        return (n_samples - self.window_len) // self.hop + 1


@dataclass
class Spectrogram:
    """Non-negative (bins x frames) matrix with axis metadata."""

    values: np.ndarray
    freq_axis: np.ndarray
    time_axis: np.ndarray
    params: StftParams


def stft_spectrogram(signal: np.ndarray, p: StftParams) -> Spectrogram:
    """Squared-magnitude one-sided spectrogram of ``signal``."""
    p.validate()
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got ndim={signal.ndim}")
    k = p.frame_count(signal.shape[0])
    idx = np.arange(k)[:, None] * p.hop + np.arange(p.window_len)[None, :]
    frames = signal[idx] * p.window()[None, :]
    spec = np.abs(np.fft.rfft(frames, n=p.nfft, axis=1)) ** 2
    values = np.ascontiguousarray(spec.T)
    freq_axis = np.fft.rfftfreq(p.nfft, d=1.0 / p.fs)
    time_axis = (np.arange(k) * p.hop + p.window_len / 2.0) / p.fs
    return Spectrogram(values=values, freq_axis=freq_axis, time_axis=time_axis, params=p)


def tensorize(
    signal: np.ndarray,
    p: StftParams,
    fold_len_s: float,
    fold_count: int,
    boundary: str = "per_fold",
) -> np.ndarray:
    """Stack per-fold spectrograms of consecutive signal segments into a tensor.

    The signal is cut into ``fold_count`` consecutive non-overlapping folds
    of ``fold_len_s`` seconds.  With ``boundary="per_fold"`` (default) each
    fold gets its own spectrogram, so no frame straddles a fold boundary.
    ``boundary="global"`` instead slices one spectrogram of the covered
    span into ``fold_count`` equal frame blocks, dropping remainder frames.

    Returns a ``(bins, frames_per_fold, fold_count)`` array.
    """
    p.validate()
    signal = np.asarray(signal, dtype=np.float64)
    if fold_count < 1:
        raise ValueError(f"fold_count must be >= 1, got {fold_count}")
    if fold_len_s <= 0:
        raise ValueError(f"fold_len_s must be positive, got {fold_len_s}")
    if boundary not in ("per_fold", "global"):
        raise ValueError(f"boundary must be 'per_fold' or 'global', got {boundary!r}")
    fold_samples = int(round(fold_len_s * p.fs))
    needed = fold_count * fold_samples
    if signal.shape[0] < needed:
        raise ValueError(
            f"insufficient length: {signal.shape[0]} samples < "
            f"{fold_count} folds x {fold_samples} samples"
        )
    if boundary == "global":
        full = stft_spectrogram(signal[:needed], p).values
        frames_per_fold = full.shape[1] // fold_count
        if frames_per_fold == 0:
            raise ValueError("folds too short for a single frame")
        t = np.empty((p.n_bins, frames_per_fold, fold_count))
        for fold in range(fold_count):
            t[:, :, fold] = full[:, fold * frames_per_fold:(fold + 1) * frames_per_fold]
        return t
    frames_per_fold = p.frame_count(fold_samples)
    t = np.empty((p.n_bins, frames_per_fold, fold_count))
    for fold in range(fold_count):
        seg = signal[fold * fold_samples:(fold + 1) * fold_samples]
        t[:, :, fold] = stft_spectrogram(seg, p).values
    return t
