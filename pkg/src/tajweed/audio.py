"""Linear-PCM WAV decoding and the mono waveform value type.

Only integer PCM WAV is accepted; anything else (AC3, float WAV,
compressed containers) must be transcoded beforehand, see
scripts/convert_to_wav.sh. Multi-channel audio is downmixed by channel
averaging.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class WavFormatError(ValueError):
    """The payload is not decodable linear-PCM WAV."""


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray  # float64, mono
    sample_rate_hz: int

    def __post_init__(self):
        if self.samples.ndim != 1:
            raise ValueError(f"waveform must be mono, got shape {self.samples.shape}")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


_PCM_SCALE = {1: 128.0, 2: 32768.0, 3: 8388608.0, 4: 2147483648.0}


def read_wav_bytes(data: bytes) -> Waveform:
    """Decode integer PCM WAV bytes to a mono float waveform in [-1, 1]."""
    try:
        with wave.open(io.BytesIO(data), "rb") as wf:
            if wf.getcomptype() != "NONE":
                raise WavFormatError(f"compressed WAV ({wf.getcomptype()}) not supported")
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:  # wave raises bare EOFError when truncated
        raise WavFormatError(f"not a decodable PCM WAV file: {exc}") from exc
    if width not in _PCM_SCALE:
        raise WavFormatError(f"unsupported sample width {width} bytes")
    if rate <= 0 or n_channels < 1:
        raise WavFormatError(f"invalid WAV header (rate={rate}, channels={n_channels})")

    if width == 1:
        x = np.frombuffer(frames, dtype=np.uint8).astype(np.float64) - 128.0
    elif width == 3:
        raw = np.frombuffer(frames, dtype=np.uint8).reshape(-1, 3)
        as32 = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        x = np.where(as32 >= 1 << 23, as32 - (1 << 24), as32).astype(np.float64)
    else:
        dtype = np.dtype("<i2") if width == 2 else np.dtype("<i4")
        x = np.frombuffer(frames, dtype=dtype).astype(np.float64)

    x = x / _PCM_SCALE[width]
    if n_channels > 1:
        x = x.reshape(-1, n_channels).mean(axis=1)
    return Waveform(samples=x, sample_rate_hz=rate)


def read_wav(path: Path | str) -> Waveform:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise WavFormatError(f"audio file not found: {path}") from None
    try:
        return read_wav_bytes(data)
    except WavFormatError as exc:
        raise WavFormatError(f"{path}: {exc}") from None


def write_wav(path: Path | str, w: Waveform) -> None:
    """Write a waveform as 16-bit PCM WAV (test fixtures, demo clips)."""
    pcm = np.clip(np.round(w.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(w.sample_rate_hz)
        wf.writeframes(pcm.tobytes())


def encode_wav_bytes(w: Waveform) -> bytes:
    buf = io.BytesIO()
    pcm = np.clip(np.round(w.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(w.sample_rate_hz)
        wf.writeframes(pcm.tobytes())
    return buf.getvalue()
