"""Generate the committed WAV fixtures and their frozen golden tensors.

Run from the repository root:

    python3 tests/golden/make_goldens.py

Writes three deterministic test clips to tests/fixtures/ and, for each,
the tensor the DSP frontend produced for it (default config) as a .mst
file in tests/golden/. The goldens were generated once, hand-checked
(frame counts, mel peak location, normalization moments), and committed;
the suite then holds the pipeline to them at max |delta| < 1e-5.
Regenerating is only legitimate after an intentional, reviewed change to
the frontend's frozen conventions.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO / "src"))

from tajweed.audio import Waveform, write_wav  # noqa: E402
from tajweed.cache import write_mst  # noqa: E402
from tajweed.config import DspConfig  # noqa: E402
from tajweed.dsp import preprocess_waveform  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"
GOLDEN = REPO / "tests" / "golden"


def sine(freq_hz: float, duration_s: float, rate: int, amp: float) -> Waveform:
    t = np.arange(int(round(duration_s * rate))) / rate
    return Waveform(samples=amp * np.sin(2.0 * math.pi * freq_hz * t), sample_rate_hz=rate)


def chirp(f0: float, f1: float, duration_s: float, rate: int, amp: float) -> Waveform:
    n = int(round(duration_s * rate))
    t = np.arange(n) / rate
    phase = 2.0 * math.pi * (f0 * t + 0.5 * (f1 - f0) * t**2 / duration_s)
    return Waveform(samples=amp * np.sin(phase), sample_rate_hz=rate)


CLIPS = {
    "silence_1s_11025hz": lambda: Waveform(samples=np.zeros(11025), sample_rate_hz=11025),
    "sine_1khz_1s_44100hz": lambda: sine(1000.0, 1.0, 44100, 0.5),
    "chirp_200_3000_2s_22050hz": lambda: chirp(200.0, 3000.0, 2.0, 22050, 0.8),
}


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    GOLDEN.mkdir(parents=True, exist_ok=True)
    cfg = DspConfig()
    for stem, build in CLIPS.items():
        wav_path = FIXTURES / f"{stem}.wav"
        write_wav(wav_path, build())
        # golden is computed from the committed WAV bytes, quantization included
        from tajweed.audio import read_wav

        tensor = preprocess_waveform(read_wav(wav_path), cfg, provenance=stem)
        write_mst(GOLDEN / f"{stem}.mst", tensor.data)
        print(f"{stem}: wav={wav_path.stat().st_size}B "
              f"tensor shape={tensor.data.shape} "
              f"mean={tensor.data.mean():+.2e} std={tensor.data.std():.6f}")


if __name__ == "__main__":
    main()
