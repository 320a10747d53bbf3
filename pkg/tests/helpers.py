"""Shared builders for test corpora, tones, and checkpoints."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from tajweed.audio import Waveform, write_wav


def make_tone(freq_hz: float, duration_s: float, rate: int, amp: float = 0.5) -> Waveform:
    t = np.arange(int(round(duration_s * rate))) / rate
    return Waveform(samples=amp * np.sin(2.0 * math.pi * freq_hz * t), sample_rate_hz=rate)


def make_chirp(
    f0_hz: float, f1_hz: float, duration_s: float, rate: int, amp: float = 0.8
) -> Waveform:
    n = int(round(duration_s * rate))
    t = np.arange(n) / rate
    # linear chirp: instantaneous frequency f0 + (f1-f0) * t / T
    phase = 2.0 * math.pi * (f0_hz * t + 0.5 * (f1_hz - f0_hz) * t**2 / duration_s)
    return Waveform(samples=amp * np.sin(phase), sample_rate_hz=rate)


def make_silence(duration_s: float, rate: int) -> Waveform:
    return Waveform(samples=np.zeros(int(round(duration_s * rate))), sample_rate_hz=rate)


def write_corpus(
    root: Path,
    rows: list[tuple[str, tuple[int, int, int]]],
    rate: int = 11025,
    duration_s: float = 0.35,
    empty_cells: dict[str, str] | None = None,
    skip_audio: set[str] | None = None,
) -> Path:
    """Lay out <root>/audio/*.wav plus labels.csv for the given rows.

    empty_cells maps clip_id -> rule key whose label cell is left blank;
    skip_audio lists clips that get a label row but no audio file.
    """
    empty_cells = empty_cells or {}
    skip_audio = skip_audio or set()
    audio_dir = root / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    with open(root / "labels.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id", "separate_stretching", "tight_noon", "hide"])
        for i, (clip_id, labels) in enumerate(rows):
            cells = [str(v) for v in labels]
            blank = empty_cells.get(clip_id)
            if blank is not None:
                keys = ("separate_stretching", "tight_noon", "hide")
                cells[keys.index(blank)] = ""
            writer.writerow([clip_id, *cells])
            if clip_id not in skip_audio:
                freq = 300.0 + 137.0 * (i % 17)  # distinct tone per clip
                write_wav(audio_dir / f"{clip_id}.wav", make_tone(freq, duration_s, rate))
    return root


def standard_rows(n: int) -> list[tuple[str, tuple[int, int, int]]]:
    """n clips cycling through a fixed set of label triples."""
    triples = [(1, 1, 1), (0, 1, 1), (1, 1, 0), (0, 1, 0), (1, 0, 1), (0, 0, 0)]
    return [(f"S{1 + i // 8}_{i % 8}", triples[i % len(triples)]) for i in range(n)]


def dsp_extras(dsp_cfg) -> dict:
    """Checkpoint extras block recording the DSP config, as the CLI writes it."""
    from dataclasses import fields

    from tajweed.rules import RULE_KEYS

    return {
        "dsp": {f.name: getattr(dsp_cfg, f.name) for f in fields(type(dsp_cfg))},
        "label_order": list(RULE_KEYS),
    }


def build_test_checkpoint(path: Path, seed: int = 0, se_placement: str = "after_pool") -> str:
    """Fresh random-init model saved to path; returns its checksum."""
    import torch

    from tajweed.checkpoint import save_checkpoint
    from tajweed.config import DspConfig, ModelConfig
    from tajweed.model import build_model

    torch.manual_seed(seed)
    model = build_model(ModelConfig(pretrained=False, se_placement=se_placement))
    return save_checkpoint(model, path, extras=dsp_extras(DspConfig()))
