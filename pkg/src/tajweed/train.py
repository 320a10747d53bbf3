"""Training loop with imbalance-weighted binary cross-entropy on logits.

The three per-rule loss weights are turned into positive-class weights by
taking reciprocals: a rule whose weight is small (rare negative class)
gets a large multiplier on its positive term. Batches are reshuffled
every epoch from the run seed; after each epoch both losses and the
per-rule test accuracies are evaluated with dropout disabled.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from tajweed.cache import TensorCache
from tajweed.checkpoint import save_checkpoint
from tajweed.config import TrainConfig
from tajweed.ingest import ClipRecord, DatasetSplit
from tajweed.model import TajweedClassifier
from tajweed.rules import METRIC_COLUMNS

log = logging.getLogger(__name__)

METRICS_HEADER = ("epoch", "train_loss", "test_loss", *METRIC_COLUMNS)


class TrainingDivergedError(RuntimeError):
    """A batch produced a non-finite loss; carries the offending clip ids."""

    def __init__(self, epoch: int, clip_ids: list[str]):
        super().__init__(
            f"non-finite loss at epoch {epoch} on batch of clips: {', '.join(clip_ids)}"
        )
        self.epoch = epoch
        self.clip_ids = clip_ids


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    test_loss: float
    accuracies: tuple[float, float, float]

    def __post_init__(self):
        if self.train_loss < 0 or self.test_loss < 0:
            raise ValueError("losses must be nonnegative")
        if any(not (0.0 <= a <= 1.0) for a in self.accuracies):
            raise ValueError(f"accuracies must lie in [0,1], got {self.accuracies}")

    def as_row(self) -> list:
        return [self.epoch, self.train_loss, self.test_loss, *self.accuracies]


def compute_pos_weights(loss_weights) -> tuple[float, float, float]:
    """Elementwise reciprocal of the per-rule loss weights."""
    if len(loss_weights) != 3:
        raise ValueError(f"expected 3 loss weights, got {len(loss_weights)}")
    if any(w <= 0 for w in loss_weights):
        raise ValueError(f"loss weights must be positive, got {tuple(loss_weights)}")
    return tuple(1.0 / float(w) for w in loss_weights)  # type: ignore[return-value]


def weighted_bce_logits(
    logits: torch.Tensor, targets: torch.Tensor, pos_weights
) -> torch.Tensor:
    """Mean of -[pw_j * y * log sigmoid(z) + (1-y) * log(1 - sigmoid(z))].

    Uses the softplus form, stable for |z| well beyond 100.
    """
    if logits.shape != targets.shape:
        raise ValueError(f"logits shape {tuple(logits.shape)} != targets {tuple(targets.shape)}")
    if not torch.all((targets == 0) | (targets == 1)):
        raise ValueError("targets must be binary")
    pw = torch.as_tensor(pos_weights, dtype=logits.dtype, device=logits.device)
    if pw.shape != (logits.shape[-1],):
        raise ValueError(f"need one positive weight per output, got shape {tuple(pw.shape)}")
    y = targets.to(logits.dtype)
    # -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = z + softplus(-z)
    softplus_neg = torch.nn.functional.softplus(-logits)
    loss = (1.0 - y) * logits + (1.0 + (pw - 1.0) * y) * softplus_neg
    return loss.mean()


def _stack_batch(cache: TensorCache, records) -> tuple[torch.Tensor, torch.Tensor]:
    tensors = np.stack([cache.get(rec.clip_id) for rec in records])
    labels = np.array([rec.labels.as_tuple() for rec in records], dtype=np.float32)
    return torch.from_numpy(tensors), torch.from_numpy(labels)


def _batches(records: tuple[ClipRecord, ...], batch_size: int):
    for i in range(0, len(records), batch_size):
        yield records[i : i + batch_size]


@torch.no_grad()
def predict_batch(
    model: TajweedClassifier, tensors: torch.Tensor, threshold: float = 0.5
) -> tuple[torch.Tensor, torch.Tensor]:
    """(verdicts, probabilities) for a batch, with verdict = prob >= threshold."""
    was_training = model.training
    model.eval()
    try:
        probabilities = torch.sigmoid(model(tensors))
    finally:
        model.train(was_training)
    return probabilities >= threshold, probabilities


@torch.no_grad()
def _evaluate(model, cache, records, pos_weights, batch_size, threshold):
    """(mean loss, per-rule accuracy) over records, dropout disabled."""
    model.eval()
    total_loss = 0.0
    n_elements = 0
    correct = np.zeros(3, dtype=np.int64)
    for chunk in _batches(records, batch_size):
        x, y = _stack_batch(cache, chunk)
        logits = model(x)
        total_loss += weighted_bce_logits(logits, y, pos_weights).item() * y.numel()
        n_elements += y.numel()
        verdicts = torch.sigmoid(logits) >= threshold
        correct += (verdicts == (y >= 0.5)).sum(dim=0).numpy()
    loss = total_loss / n_elements
    accuracy = correct / len(records)
    return loss, tuple(float(a) for a in accuracy)


def append_metrics_row(path: Path, metrics: EpochMetrics) -> None:
    new = not path.exists()
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(METRICS_HEADER)
        writer.writerow(metrics.as_row())


def train(
    model: TajweedClassifier,
    split: DatasetSplit,
    cache: TensorCache,
    cfg: TrainConfig,
    run_dir: Path | str | None = None,
    extras: dict | None = None,
) -> tuple[TajweedClassifier, list[EpochMetrics]]:
    """Optimize the model on the train split; returns per-epoch metrics.

    When run_dir is given, appends metrics.csv rows as epochs finish and
    keeps both the best-test-loss and the final checkpoint there.
    """
    if not split.train:
        raise ValueError("train split is empty")
    if cfg.optimizer.lower() != "adam":
        raise ValueError(f"unsupported optimizer {cfg.optimizer!r}")
    missing = [r.clip_id for r in (*split.train, *split.test) if not cache.has(r.clip_id)]
    if missing:
        raise ValueError(
            f"{len(missing)} clip(s) missing from the tensor cache "
            f"(run preprocessing first): {', '.join(missing[:10])}"
        )

    run_path = Path(run_dir) if run_dir is not None else None
    if run_path is not None:
        run_path.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(cfg.seed)
    pos_weights = compute_pos_weights(cfg.loss_weights)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)

    history: list[EpochMetrics] = []
    best_test_loss = float("inf")
    for epoch in range(1, cfg.epochs + 1):
        order = list(split.train)
        random.Random(f"{cfg.seed}:{epoch}").shuffle(order)
        model.train()
        for chunk in _batches(tuple(order), cfg.batch_size):
            x, y = _stack_batch(cache, chunk)
            loss = weighted_bce_logits(model(x), y, pos_weights)
            if not torch.isfinite(loss):
                error = TrainingDivergedError(epoch, [r.clip_id for r in chunk])
                if run_path is not None:
                    (run_path / "diverged.json").write_text(
                        json.dumps({"epoch": epoch, "clip_ids": error.clip_ids}, indent=2)
                    )
                raise error
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

        train_loss, _ = _evaluate(model, cache, split.train, pos_weights, cfg.batch_size, cfg.threshold)
        if split.test:
            test_loss, accuracies = _evaluate(
                model, cache, split.test, pos_weights, cfg.batch_size, cfg.threshold
            )
        else:
            test_loss, accuracies = train_loss, (0.0, 0.0, 0.0)
        metrics = EpochMetrics(epoch, train_loss, test_loss, accuracies)
        history.append(metrics)
        log.info(
            "epoch %d/%d train_loss=%.4f test_loss=%.4f acc=%s",
            epoch, cfg.epochs, train_loss, test_loss,
            "/".join(f"{a:.4f}" for a in accuracies),
        )
        if run_path is not None:
            append_metrics_row(run_path / "metrics.csv", metrics)
            if test_loss < best_test_loss:
                best_test_loss = test_loss
                save_checkpoint(model, run_path / "checkpoint_best", extras=extras)

    if run_path is not None:
        save_checkpoint(model, run_path / "checkpoint_final", extras=extras)
    return model, history
