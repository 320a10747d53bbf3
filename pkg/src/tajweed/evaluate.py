"""Accuracy reporting, confusion matrices, and learning-curve export.

Accuracy is per-rule binary accuracy, matching how the scored results are
reported; exact-match (all three rules right) accuracy is included as a
supplementary figure since the task is multi-label.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tajweed.rules import METRIC_COLUMNS, RULE_KEYS
from tajweed.train import METRICS_HEADER, EpochMetrics


def accuracy(preds: np.ndarray, labels: np.ndarray) -> tuple[float, float, float]:
    """Per-rule fraction of agreeing entries."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape or preds.ndim != 2 or preds.shape[1] != 3:
        raise ValueError(f"need matching (N, 3) arrays, got {preds.shape} and {labels.shape}")
    if preds.shape[0] < 1:
        raise ValueError("need at least one prediction")
    agree = (preds.astype(np.int64) == labels.astype(np.int64)).mean(axis=0)
    return tuple(float(a) for a in agree)  # type: ignore[return-value]


def confusion(preds: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """[[TN, FP], [FN, TP]] counts for one rule."""
    preds = np.asarray(preds).ravel()
    labels = np.asarray(labels).ravel()
    if preds.shape != labels.shape:
        raise ValueError(f"shape mismatch: {preds.shape} vs {labels.shape}")
    for arr, what in ((preds, "preds"), (labels, "labels")):
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError(f"{what} must be binary 0/1")
    preds = preds.astype(np.int64)
    labels = labels.astype(np.int64)
    out = np.zeros((2, 2), dtype=np.int64)
    np.add.at(out, (labels, preds), 1)
    return out


@dataclass(frozen=True)
class EvalReport:
    accuracies: tuple[float, float, float]
    average_accuracy: float
    confusions: tuple  # three 2x2 integer count lists, rule order
    exact_match_accuracy: float
    n_clips: int
    checkpoint_id: str
    split_manifest_sha256: str

    def summary_lines(self) -> list[str]:
        lines = [
            f"{key}: {100.0 * acc:.2f}%" for key, acc in zip(RULE_KEYS, self.accuracies)
        ]
        lines.append(f"average: {100.0 * self.average_accuracy:.2f}%")
        lines.append(f"exact_match (supplementary): {100.0 * self.exact_match_accuracy:.2f}%")
        return lines


def build_report(
    preds: np.ndarray,
    labels: np.ndarray,
    checkpoint_id: str = "",
    split_manifest_sha256: str = "",
) -> EvalReport:
    accs = accuracy(preds, labels)
    matrices = tuple(confusion(preds[:, j], labels[:, j]).tolist() for j in range(3))
    exact = float(
        np.all(np.asarray(preds).astype(np.int64) == np.asarray(labels).astype(np.int64), axis=1).mean()
    )
    return EvalReport(
        accuracies=accs,
        average_accuracy=float(sum(accs) / 3.0),
        confusions=matrices,
        exact_match_accuracy=exact,
        n_clips=int(np.asarray(preds).shape[0]),
        checkpoint_id=checkpoint_id,
        split_manifest_sha256=split_manifest_sha256,
    )


def write_report(report: EvalReport, path: Path | str) -> None:
    """Deterministic JSON serialization (same inputs, same bytes)."""
    doc = {
        "accuracies": {key: report.accuracies[j] for j, key in enumerate(RULE_KEYS)},
        "accuracies_pct": {
            key: f"{100.0 * report.accuracies[j]:.2f}" for j, key in enumerate(RULE_KEYS)
        },
        "average_accuracy": report.average_accuracy,
        "average_accuracy_pct": f"{100.0 * report.average_accuracy:.2f}",
        "exact_match_accuracy": report.exact_match_accuracy,
        "confusion_matrices": {key: report.confusions[j] for j, key in enumerate(RULE_KEYS)},
        "n_clips": report.n_clips,
        "checkpoint_id": report.checkpoint_id,
        "split_manifest_sha256": report.split_manifest_sha256,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_metrics_csv(metrics: list[EpochMetrics], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for m in metrics:
            writer.writerow(m.as_row())


def read_metrics_csv(path: Path | str) -> list[EpochMetrics]:
    out: list[EpochMetrics] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_HEADER:
            raise ValueError(f"bad metrics header in {path}: {reader.fieldnames}")
        for row in reader:
            out.append(
                EpochMetrics(
                    epoch=int(row["epoch"]),
                    train_loss=float(row["train_loss"]),
                    test_loss=float(row["test_loss"]),
                    accuracies=tuple(float(row[c]) for c in METRIC_COLUMNS),
                )
            )
    return out


def export_learning_curves(metrics: list[EpochMetrics], out_dir: Path | str) -> dict:
    """Write metrics.csv and curves.png; flag whether the final test loss
    is the minimum of the whole series."""
    if not metrics:
        raise ValueError("no metrics to export")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(metrics, out / "metrics.csv")

    epochs = [m.epoch for m in metrics]
    test_losses = [m.test_loss for m in metrics]
    flag = test_losses[-1] <= min(test_losses)

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(11, 4))
    ax_loss.plot(epochs, [m.train_loss for m in metrics], label="train loss")
    ax_loss.plot(epochs, test_losses, label="test loss")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    for j, key in enumerate(RULE_KEYS):
        ax_acc.plot(epochs, [m.accuracies[j] for m in metrics], label=key)
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("test accuracy")
    ax_acc.set_ylim(0.0, 1.02)
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(out / "curves.png", dpi=120)
    plt.close(fig)

    summary = {"final_test_loss_is_minimum": bool(flag), "epochs": len(metrics)}
    (out / "curves_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary
