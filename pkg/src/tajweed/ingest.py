"""Corpus loading, known-defect repair, and the deterministic 80/20 split.

Corpus layout on disk:

    <root>/audio/<clip_id>.wav
    <root>/labels.csv        # header: clip_id,separate_stretching,tight_noon,hide

The public QDAT table ships one known defect: the tight_noon cell for clip
S22_6 is empty. Every other row from that speaker carries 1, so the cell is
imputed to 1 and the record is flagged; pass exclude_defective=True to drop
the clip instead.
"""

from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

from tajweed.rules import RULE_KEYS

log = logging.getLogger(__name__)

# clip_id -> (rule key, imputed value) for known label-table defects
KNOWN_LABEL_REPAIRS: dict[str, tuple[str, int]] = {"S22_6": ("tight_noon", 1)}


class CorpusError(ValueError):
    """The corpus on disk violates the expected layout or label format."""


@dataclass(frozen=True)
class RuleLabels:
    separate_stretching: int
    tight_noon: int
    hide: int

    def __post_init__(self):
        for key in RULE_KEYS:
            if getattr(self, key) not in (0, 1):
                raise ValueError(f"label {key} must be 0 or 1, got {getattr(self, key)!r}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.separate_stretching, self.tight_noon, self.hide)


@dataclass(frozen=True)
class ClipRecord:
    clip_id: str
    speaker_id: str
    audio_path: Path
    labels: RuleLabels
    imputed: tuple[str, ...] = field(default=())  # rule keys whose labels were repaired


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[ClipRecord, ...]
    test: tuple[ClipRecord, ...]
    seed: int


def _parse_label(value: str, clip_id: str, rule_key: str, row_number: int) -> int | None:
    value = value.strip()
    if value == "":
        return None
    if value in ("0", "1"):
        return int(value)
    raise CorpusError(
        f"labels row {row_number}: unparseable {rule_key} value {value!r} "
        f"for clip {clip_id!r} (expected 0, 1, or empty)"
    )


def load_corpus(
    root_dir: Path | str,
    labels_file: Path | str | None = None,
    exclude_defective: bool = False,
) -> list[ClipRecord]:
    """Read the label table and pair every row with its audio file.

    Preserves table row order. Missing audio for a labeled row is a hard
    error; a missing label cell is a hard error unless it is a known
    defect, which is imputed (or dropped with exclude_defective).
    """
    root = Path(root_dir)
    labels_path = Path(labels_file) if labels_file else root / "labels.csv"
    audio_dir = root / "audio"
    if not labels_path.is_file():
        raise CorpusError(f"labels file not found: {labels_path}")

    with open(labels_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["clip_id", *RULE_KEYS]
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != expected:
            raise CorpusError(
                f"labels file must have header {','.join(expected)}, "
                f"got {reader.fieldnames}"
            )
        records: list[ClipRecord] = []
        missing_audio: list[str] = []
        for row_number, row in enumerate(reader, start=2):
            clip_id = (row["clip_id"] or "").strip()
            if not clip_id:
                raise CorpusError(f"labels row {row_number}: empty clip_id")
            values: dict[str, int] = {}
            imputed: list[str] = []
            for key in RULE_KEYS:
                parsed = _parse_label(row[key] or "", clip_id, key, row_number)
                if parsed is None:
                    repair = KNOWN_LABEL_REPAIRS.get(clip_id)
                    if repair is None or repair[0] != key:
                        raise CorpusError(
                            f"labels row {row_number}: missing {key} label for "
                            f"clip {clip_id!r} with no known repair"
                        )
                    if exclude_defective:
                        values = {}
                        break
                    parsed = repair[1]
                    imputed.append(key)
                    log.info("imputed %s=%d for clip %s (known table defect)", key, parsed, clip_id)
                values[key] = parsed
            if not values:  # defective row excluded
                log.info("excluded clip %s (defective label row)", clip_id)
                continue
            audio_path = audio_dir / f"{clip_id}.wav"
            if not audio_path.is_file():
                missing_audio.append(clip_id)
                continue
            records.append(
                ClipRecord(
                    clip_id=clip_id,
                    speaker_id=clip_id.split("_", 1)[0],
                    audio_path=audio_path,
                    labels=RuleLabels(**values),
                    imputed=tuple(imputed),
                )
            )

    if missing_audio:
        raise CorpusError(
            f"{len(missing_audio)} labeled clip(s) have no audio file under "
            f"{audio_dir}: {', '.join(missing_audio[:10])}"
            + ("..." if len(missing_audio) > 10 else "")
        )
    seen: set[str] = set()
    for rec in records:
        if rec.clip_id in seen:
            raise CorpusError(f"duplicate clip_id in labels file: {rec.clip_id}")
        seen.add(rec.clip_id)

    if records:
        neg = class_distribution(records)
        log.info(
            "loaded %d clips; negative-class fractions: %s",
            len(records),
            ", ".join(f"{k}={v:.3f}" for k, v in zip(RULE_KEYS, neg)),
        )
    return records


def class_distribution(records: list[ClipRecord]) -> tuple[float, float, float]:
    """Fraction of label-0 clips per rule."""
    if not records:
        raise ValueError("cannot compute class distribution of an empty corpus")
    n = len(records)
    zeros = [0, 0, 0]
    for rec in records:
        for j, v in enumerate(rec.labels.as_tuple()):
            if v == 0:
                zeros[j] += 1
    return tuple(z / n for z in zeros)  # type: ignore[return-value]


def split_dataset(records: list[ClipRecord], seed: int) -> DatasetSplit:
    """Deterministic 80/20 split, stratified on the joint label triple.

    Overall sizes are exactly (floor(0.8*N), remainder). Each stratum
    contributes either floor(0.8*k) or that plus one train clips, the
    extras going to the strata with the largest fractional remainders, so
    every stratum stays within one clip of an 80% train share.
    """
    if seed is None or not isinstance(seed, int):
        raise ValueError("an explicit integer seed is required")
    n = len(records)
    if n < 5:
        raise ValueError(f"need at least 5 records to split 80/20, got {n}")

    strata: dict[tuple[int, int, int], list[int]] = {}
    for idx, rec in enumerate(records):
        strata.setdefault(rec.labels.as_tuple(), []).append(idx)

    # floor(0.8*k) in exact integer arithmetic: (4*k) // 5
    n_train_total = (4 * n) // 5
    base: dict[tuple[int, int, int], int] = {}
    remainders: list[tuple[int, tuple[int, int, int]]] = []
    for triple in sorted(strata):
        k = len(strata[triple])
        base[triple] = (4 * k) // 5
        remainders.append(((4 * k) % 5, triple))
    leftover = n_train_total - sum(base.values())
    # largest remainder first; stratum key breaks ties deterministically
    remainders.sort(key=lambda pair: (-pair[0], pair[1]))
    for _, triple in remainders[:leftover]:
        base[triple] += 1

    rng = random.Random(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for triple in sorted(strata):
        members = list(strata[triple])
        rng.shuffle(members)
        take = base[triple]
        train_idx.extend(members[:take])
        test_idx.extend(members[take:])
    train_idx.sort()
    test_idx.sort()
    return DatasetSplit(
        train=tuple(records[i] for i in train_idx),
        test=tuple(records[i] for i in test_idx),
        seed=seed,
    )


def write_split_manifest(split: DatasetSplit, path: Path | str) -> None:
    """clip_id,subset CSV committed alongside a run for reproducibility."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id", "subset"])
        for rec in split.train:
            writer.writerow([rec.clip_id, "train"])
        for rec in split.test:
            writer.writerow([rec.clip_id, "test"])


def read_split_manifest(path: Path | str) -> dict[str, str]:
    """clip_id -> subset mapping from a committed manifest."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["clip_id", "subset"]:
            raise CorpusError(f"bad split manifest header in {path}: {reader.fieldnames}")
        for row in reader:
            subset = row["subset"].strip()
            if subset not in ("train", "test"):
                raise CorpusError(f"bad subset {subset!r} in {path}")
            out[row["clip_id"].strip()] = subset
    return out


def apply_split_manifest(records: list[ClipRecord], manifest: dict[str, str], seed: int = -1) -> DatasetSplit:
    """Rebuild a DatasetSplit from records plus a committed manifest."""
    by_id = {rec.clip_id: rec for rec in records}
    missing = sorted(set(manifest) - set(by_id))
    if missing:
        raise CorpusError(f"split manifest names unknown clips: {missing[:10]}")
    train = tuple(rec for rec in records if manifest.get(rec.clip_id) == "train")
    test = tuple(rec for rec in records if manifest.get(rec.clip_id) == "test")
    return DatasetSplit(train=train, test=test, seed=seed)
