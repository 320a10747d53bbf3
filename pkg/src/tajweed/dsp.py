"""Waveform to model-ready tensor: resample, log-mel, normalize, resize.

The pipeline is pure numpy/scipy and fully deterministic:

    resample(11025 Hz) -> mel power spectrogram (224 mels, 0-4000 Hz)
    -> log(x + 1e-6), standardize per image -> bilinear resize of the
    time axis to 224 frames -> tile to 3 identical channels.

Conventions frozen here (and by the golden-file tests): periodic Hann
window, power-2 spectrum, zero-padded centered frames, Slaney mel scale
with area-normalized triangular filters, half-pixel-center bilinear
resampling. The resized image is re-standardized so the tensor handed to
the model always has zero mean and unit variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

from tajweed.audio import Waveform, read_wav
from tajweed.config import DspConfig


@dataclass(frozen=True)
class SpectrogramTensor:
    data: np.ndarray  # (n_mels, out_frames, 3) float32
    provenance: str  # clip_id

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"expected (mel, time, 3) tensor, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("tensor contains non-finite values")


def resample(w: Waveform, target_rate_hz: int) -> Waveform:
    """Band-limited (polyphase windowed-sinc) resampling to the target rate."""
    if len(w.samples) == 0:
        raise ValueError("cannot resample an empty waveform")
    if w.sample_rate_hz == target_rate_hz:
        return w
    ratio = Fraction(target_rate_hz, w.sample_rate_hz)
    out = resample_poly(w.samples.astype(np.float64), ratio.numerator, ratio.denominator)
    return Waveform(samples=out, sample_rate_hz=target_rate_hz)


# Slaney mel scale: linear below 1 kHz, logarithmic above.
_MEL_LINEAR_SLOPE = 3.0 / 200.0
_MEL_BREAK_HZ = 1000.0
_MEL_BREAK = _MEL_BREAK_HZ * _MEL_LINEAR_SLOPE  # 15.0
_MEL_LOG_STEP = math.log(6.4) / 27.0


def hz_to_mel(f_hz: np.ndarray | float) -> np.ndarray:
    f = np.asarray(f_hz, dtype=np.float64)
    return np.where(
        f < _MEL_BREAK_HZ,
        f * _MEL_LINEAR_SLOPE,
        _MEL_BREAK + np.log(np.maximum(f, _MEL_BREAK_HZ) / _MEL_BREAK_HZ) / _MEL_LOG_STEP,
    )


def mel_to_hz(m: np.ndarray | float) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return np.where(
        m < _MEL_BREAK,
        m / _MEL_LINEAR_SLOPE,
        _MEL_BREAK_HZ * np.exp(_MEL_LOG_STEP * (m - _MEL_BREAK)),
    )


def mel_filterbank(cfg: DspConfig) -> np.ndarray:
    """(n_mels, n_fft//2 + 1) triangular filters, area-normalized."""
    fft_freqs = np.fft.rfftfreq(cfg.n_fft, d=1.0 / cfg.target_rate_hz)
    mel_pts = np.linspace(hz_to_mel(cfg.f_min_hz), hz_to_mel(cfg.f_max_hz), cfg.n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)

    lower = hz_pts[:-2, None]
    center = hz_pts[1:-1, None]
    upper = hz_pts[2:, None]
    rising = (fft_freqs[None, :] - lower) / (center - lower)
    falling = (upper - fft_freqs[None, :]) / (upper - center)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    fb *= (2.0 / (upper - lower))  # equal-area normalization
    return fb


def filter_center_frequencies(cfg: DspConfig) -> np.ndarray:
    mel_pts = np.linspace(hz_to_mel(cfg.f_min_hz), hz_to_mel(cfg.f_max_hz), cfg.n_mels + 2)
    return mel_to_hz(mel_pts)[1:-1]


def mel_spectrogram(w: Waveform, cfg: DspConfig) -> np.ndarray:
    """(n_mels, T) nonnegative mel power spectrogram, T = floor(len/hop) + 1."""
    if w.sample_rate_hz != cfg.target_rate_hz:
        raise ValueError(
            f"waveform rate {w.sample_rate_hz} != configured {cfg.target_rate_hz}; resample first"
        )
    x = w.samples.astype(np.float64)
    if len(x) < cfg.hop:
        raise ValueError(f"waveform too short: {len(x)} samples < one hop ({cfg.hop})")

    pad = cfg.n_fft // 2
    x = np.pad(x, pad)  # centered frames, zero padding at the edges
    n_frames = 1 + (len(w.samples) // cfg.hop)
    starts = np.arange(n_frames) * cfg.hop
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.n_fft)[starts]

    window = np.hanning(cfg.n_fft + 1)[:-1]  # periodic Hann
    spectrum = np.abs(np.fft.rfft(frames * window, axis=1)) ** cfg.spectrum_power
    return mel_filterbank(cfg) @ spectrum.T


def log_normalize(m: np.ndarray, log_offset: float = 1e-6) -> np.ndarray:
    """log(m + offset), then standardize over the whole image."""
    if np.any(m < 0):
        raise ValueError("mel spectrogram entries must be nonnegative")
    logged = np.log(m + log_offset)
    # a constant image has no scale to standardize by; test constancy via
    # ptp, not std == 0: the pairwise mean can be off by one ulp, making
    # std of a constant array ~1e-16 and amplifying that noise to +-1
    std = logged.std()
    if std == 0.0 or np.ptp(logged) == 0.0:
        return np.zeros_like(logged)
    return (logged - logged.mean()) / std


def _resize_time_bilinear(m: np.ndarray, out_frames: int) -> np.ndarray:
    """Resize the time axis with half-pixel-center bilinear interpolation."""
    t_in = m.shape[1]
    if t_in == out_frames:
        return m.copy()
    x = (np.arange(out_frames) + 0.5) * (t_in / out_frames) - 0.5
    x0 = np.floor(x).astype(int)
    frac = x - x0
    left = np.clip(x0, 0, t_in - 1)
    right = np.clip(x0 + 1, 0, t_in - 1)
    return m[:, left] * (1.0 - frac) + m[:, right] * frac


def to_model_tensor(m: np.ndarray, cfg: DspConfig, provenance: str = "") -> SpectrogramTensor:
    """Resize time to out_frames, re-standardize, tile to 3 channels."""
    if m.ndim != 2 or m.shape[0] != cfg.n_mels:
        raise ValueError(f"expected {cfg.n_mels} mel rows, got shape {m.shape}")
    if m.shape[1] < 1:
        raise ValueError("spectrogram has no time frames")
    resized = _resize_time_bilinear(np.asarray(m, dtype=np.float64), cfg.out_frames)
    # interpolation shifts the image moments slightly; restore mean 0 / std 1
    std = resized.std()
    if std == 0.0 or np.ptp(resized) == 0.0:  # constant plane, nothing to scale
        plane = np.zeros_like(resized)
    else:
        plane = (resized - resized.mean()) / std
    data = np.repeat(plane.astype(np.float32)[:, :, None], 3, axis=2)
    return SpectrogramTensor(data=data, provenance=provenance)


def normalize_peak(w: Waveform) -> Waveform:
    """Scale to unit peak so recording level cannot leak into the features.

    Without this, mel bins whose energy sits near the log offset would make
    the final tensor depend on input gain.
    """
    peak = float(np.abs(w.samples).max()) if len(w.samples) else 0.0
    if peak == 0.0:
        return w
    return Waveform(samples=w.samples / peak, sample_rate_hz=w.sample_rate_hz)


def preprocess_waveform(w: Waveform, cfg: DspConfig, provenance: str = "") -> SpectrogramTensor:
    """Full frontend on an in-memory waveform."""
    w = normalize_peak(resample(w, cfg.target_rate_hz))
    mel = mel_spectrogram(w, cfg)
    return to_model_tensor(log_normalize(mel, cfg.log_offset), cfg, provenance=provenance)


def preprocess_clip(record, cfg: DspConfig) -> SpectrogramTensor:
    """Full frontend on one corpus clip; errors carry the clip_id."""
    try:
        w = read_wav(record.audio_path)
        return preprocess_waveform(w, cfg, provenance=record.clip_id)
    except (ValueError, OSError) as exc:
        raise type(exc)(f"clip {record.clip_id}: {exc}") from exc
