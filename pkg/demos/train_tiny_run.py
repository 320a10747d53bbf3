"""Train the classifier on a tiny synthetic corpus, end to end.

Lays out a throwaway corpus of labeled tones, preprocesses it into a
tensor cache, runs a short training loop, and evaluates the result.
Everything lands in a temp directory; nothing here needs real data or
a network connection. Expect a couple of minutes on CPU.
"""

import csv
import math
import random
import tempfile
from pathlib import Path

import numpy as np
import torch

from tajweed.audio import Waveform, write_wav
from tajweed.cache import TensorCache
from tajweed.config import DspConfig, ModelConfig, TrainConfig
from tajweed.evaluate import build_report
from tajweed.ingest import load_corpus, split_dataset, write_split_manifest
from tajweed.model import build_model
from tajweed.rules import RULE_KEYS
from tajweed.train import predict_batch, train

work = Path(tempfile.mkdtemp(prefix="tajweed_demo_"))
root = work / "corpus"
(root / "audio").mkdir(parents=True)
print(f"working in {work}")

# --- 24 labeled tone clips; labels are random, this is a plumbing demo ---
rng = random.Random(3)
rate = 11025
with open(root / "labels.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["clip_id", *RULE_KEYS])
    for i in range(24):
        clip_id = f"S{1 + i // 8}_{i % 8}"
        labels = [rng.randint(0, 1) for _ in RULE_KEYS]
        writer.writerow([clip_id, *labels])
        t = np.arange(int(0.4 * rate)) / rate
        tone = 0.5 * np.sin(2.0 * math.pi * (260.0 + 85.0 * i) * t)
        write_wav(root / "audio" / f"{clip_id}.wav", Waveform(tone, rate))

records = load_corpus(root)
split = split_dataset(records, seed=3)
write_split_manifest(split, root / "split.csv")
print(f"{len(records)} clips -> {len(split.train)} train / {len(split.test)} test")

# --- preprocess into the cache the trainer reads from ---
cache = TensorCache(work / "cache", DspConfig())
for record in records:
    cache.ensure(record)
print(f"cached {len(records)} tensors under {cache.root}")

# --- a short run; real training uses 40 epochs ---
cfg = TrainConfig(seed=3, epochs=3, batch_size=8)
print(f"\npos-weights from class imbalance: "
      f"{tuple(round(w, 4) for w in cfg.pos_weights)}")
model = build_model(ModelConfig(pretrained=False))
run_dir = work / "run"
_, history = train(model, split, cache, cfg, run_dir=run_dir)

print("\nepoch  train_loss  test_loss  " + "  ".join(RULE_KEYS))
for m in history:
    accs = "  ".join(f"{a:^{len(k)}.2f}" for k, a in zip(RULE_KEYS, m.accuracies))
    print(f"{m.epoch:>5}  {m.train_loss:>10.4f}  {m.test_loss:>9.4f}  {accs}")

# --- score the held-out clips with the final model ---
batch = torch.from_numpy(np.stack([cache.ensure(r)[0] for r in split.test]))
verdicts, _ = predict_batch(model, batch)
labels = np.array([r.labels.as_tuple() for r in split.test])
report = build_report(verdicts.numpy().astype(np.int64), labels)
print(f"\nper-rule accuracy on the {report.n_clips} held-out clips:")
for key, acc in zip(RULE_KEYS, report.accuracies):
    print(f"  {key:<20} {100 * acc:.1f}%")
print(f"run artifacts (metrics.csv, checkpoints) are in {run_dir}")
