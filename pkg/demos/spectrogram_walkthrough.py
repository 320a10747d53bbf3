"""Walk a waveform through the spectrogram front end, stage by stage.

Builds a short synthetic recitation stand-in (a chirp), then shows what
each stage of the pipeline does to it: resampling, the mel filterbank,
log compression, and the final 224x224x3 model tensor. Saves a figure
next to this script if matplotlib is importable.
"""

import math

import numpy as np

from tajweed.audio import Waveform
from tajweed.config import DspConfig
from tajweed.dsp import (
    filter_center_frequencies,
    log_normalize,
    mel_spectrogram,
    normalize_peak,
    resample,
    to_model_tensor,
)

cfg = DspConfig()
print(f"pipeline config: {cfg.target_rate_hz} Hz, {cfg.n_mels} mel bands, "
      f"{cfg.n_fft}-point FFT, hop {cfg.hop}")

# --- a 1.2 s chirp at 44.1 kHz, the kind of rate a phone records at ---
rate_in = 44100
t = np.arange(int(1.2 * rate_in)) / rate_in
phase = 2.0 * math.pi * (300.0 * t + 0.5 * (2200.0 - 300.0) * t**2 / 1.2)
wave = Waveform(samples=0.6 * np.sin(phase), sample_rate_hz=rate_in)
print(f"\ninput: {len(wave.samples)} samples at {wave.sample_rate_hz} Hz "
      f"({wave.duration_s:.2f} s)")

# --- stage 1: resample to the pipeline rate and normalize the peak ---
wave = normalize_peak(resample(wave, cfg.target_rate_hz))
print(f"resampled: {len(wave.samples)} samples at {wave.sample_rate_hz} Hz, "
      f"peak {np.max(np.abs(wave.samples)):.3f}")

# --- stage 2: mel power spectrogram ---
mel = mel_spectrogram(wave, cfg)
print(f"mel spectrogram: {mel.shape} (bands x frames)")
centers = filter_center_frequencies(cfg)
print(f"filter centers run {centers[0]:.0f} Hz to {centers[-1]:.0f} Hz; "
      "spacing is linear below 1 kHz and logarithmic above")

# the chirp sweeps upward, so the loudest band should climb frame by frame
peak_bands = mel.argmax(axis=0)
print(f"loudest band, first frame -> last frame: {peak_bands[0]} -> {peak_bands[-1]}")

# --- stage 3: log compression and per-image standardization ---
logged = log_normalize(mel)
print(f"\nlog-normalized: mean {logged.mean():+.2e}, std {logged.std():.3f}")

# --- stage 4: resize time to 224 and tile to three channels ---
tensor = to_model_tensor(logged, cfg)
print(f"model tensor: {tensor.data.shape}, dtype {tensor.data.dtype}")
print(f"channels identical: {np.array_equal(tensor.data[..., 0], tensor.data[..., 2])}")
print(f"re-standardized: mean {tensor.data.mean():+.2e}, std {tensor.data.std():.3f}")

# --- optional: draw the stages ---
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed; skipping the figure")
else:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    axes[0].imshow(mel, aspect="auto", origin="lower")
    axes[0].set_title("mel power")
    axes[1].imshow(logged, aspect="auto", origin="lower")
    axes[1].set_title("log-normalized")
    axes[2].imshow(tensor.data[..., 0], aspect="auto", origin="lower")
    axes[2].set_title("model tensor (ch 0)")
    for ax in axes:
        ax.set_xlabel("frame")
    axes[0].set_ylabel("mel band")
    fig.tight_layout()
    out = __file__.replace(".py", ".png")
    fig.savefig(out, dpi=110)
    print(f"\nwrote {out}")
