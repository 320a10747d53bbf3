"""Score one recording against the three recitation rules.

    python3 demos/score_recording.py [checkpoint] [recording.wav]

With no arguments this builds a random-init checkpoint and a synthetic
tone, so the verdicts are arbitrary; the point is to show the scoring
path a real checkpoint and microphone clip would take.
"""

import math
import sys
import tempfile
from pathlib import Path

import numpy as np
import torch

from tajweed.audio import Waveform, read_wav, write_wav
from tajweed.checkpoint import load_checkpoint, save_checkpoint
from tajweed.config import DspConfig, ModelConfig
from tajweed.dsp import preprocess_waveform
from tajweed.model import build_model
from tajweed.rules import RULES
from tajweed.train import predict_batch

# --- resolve inputs, fabricating whichever ones were not supplied ---
work = Path(tempfile.mkdtemp(prefix="tajweed_demo_"))

if len(sys.argv) > 1:
    ckpt_path = Path(sys.argv[1])
else:
    ckpt_path = work / "untrained.ckpt"
    torch.manual_seed(0)
    save_checkpoint(build_model(ModelConfig(pretrained=False)), ckpt_path)
    print(f"no checkpoint given; saved an untrained one to {ckpt_path}")

if len(sys.argv) > 2:
    wav_path = Path(sys.argv[2])
else:
    wav_path = work / "clip.wav"
    rate = 11025
    t = np.arange(int(0.8 * rate)) / rate
    write_wav(wav_path, Waveform(0.5 * np.sin(2.0 * math.pi * 440.0 * t), rate))
    print(f"no recording given; wrote a 440 Hz tone to {wav_path}")

# --- load, preprocess, score ---
loaded = load_checkpoint(ckpt_path)
dsp_flat = loaded.extras.get("dsp")
dsp_cfg = DspConfig(**dsp_flat) if dsp_flat else DspConfig()
print(f"\nmodel {loaded.checksum[:12]}..., dsp config {dsp_cfg.cache_key()}")

wave = read_wav(wav_path)
tensor = preprocess_waveform(wave, dsp_cfg, provenance=wav_path.stem)
verdicts, probs = predict_batch(loaded.model, torch.from_numpy(tensor.data[None, ...]))

print(f"\n{wav_path.name} ({wave.duration_s:.2f} s)\n")
for rule, ok, p in zip(RULES, verdicts[0], probs[0]):
    mark = "correct" if ok else "needs work"
    print(f"  {rule.name:<28} {mark:<11} p={float(p):.3f}")
    print(f"    {rule.description}")
