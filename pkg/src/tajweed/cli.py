"""Command-line entry point: prepare, preprocess, train, evaluate, predict, serve.

Every command appends one entry to `<runs>/manifest.jsonl` recording the
command, config path, seed, input file hashes, output paths, and exit
status, so any run can be reproduced from its manifest line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from tajweed import __version__
from tajweed.config import PipelineConfig, file_sha256, load_config, save_config
from tajweed.ingest import (
    CorpusError,
    apply_split_manifest,
    class_distribution,
    load_corpus,
    read_split_manifest,
    split_dataset,
    write_split_manifest,
)
from tajweed.rules import RULE_KEYS

# tajweed.model / .train / .checkpoint import torch (slow); handlers that
# need them import lazily so `prepare` and `--version` stay snappy

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we pin 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    seed: int | None
    input_hashes: dict = field(default_factory=dict)
    output_paths: list = field(default_factory=list)
    exit_status: int = 0
    timestamp: str = ""


def _append_manifest(runs_dir: Path, entry: RunManifest) -> None:
    runs_dir.mkdir(parents=True, exist_ok=True)
    entry.timestamp = time.strftime("%Y-%m-%dT%H:%M:%S")
    with open(runs_dir / "manifest.jsonl", "a", encoding="utf-8") as fh:
        fh.write(json.dumps(asdict(entry), sort_keys=True) + "\n")


def _hash_if_exists(entry: RunManifest, name: str, path) -> None:
    if path is not None and Path(path).is_file():
        entry.input_hashes[name] = file_sha256(path)


def _emit(payload: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


def cmd_prepare(args, entry: RunManifest) -> dict:
    records = load_corpus(args.root, args.labels, exclude_defective=args.exclude_defective)
    negatives = class_distribution(records)
    split = split_dataset(records, args.seed)
    out = Path(args.out) if args.out else Path(args.root) / "split.csv"
    write_split_manifest(split, out)
    _hash_if_exists(entry, "labels", args.labels or Path(args.root) / "labels.csv")
    entry.output_paths.append(str(out))
    imputed = sorted(r.clip_id for r in records if r.imputed)
    return {
        "clips": len(records),
        "negative_fractions": {k: round(v, 4) for k, v in zip(RULE_KEYS, negatives)},
        "imputed_clips": imputed,
        "train_size": len(split.train),
        "test_size": len(split.test),
        "split_manifest": str(out),
        "split_manifest_sha256": file_sha256(out),
    }


def cmd_preprocess(args, entry: RunManifest) -> dict:
    from tajweed.cache import TensorCache

    cfg = load_config(args.config)
    records = load_corpus(args.root, args.labels)
    cache = TensorCache(args.cache or Path(args.root) / "cache", cfg.dsp)
    _hash_if_exists(entry, "config", args.config)
    processed = skipped = 0
    failures: dict[str, str] = {}
    for record in records:
        try:
            _, was_cached = cache.ensure(record)
        except (ValueError, OSError) as exc:
            failures[record.clip_id] = str(exc)
            log.error("preprocess failed for %s: %s", record.clip_id, exc)
            continue
        if was_cached:
            skipped += 1
            log.info("cache hit for %s, skipped", record.clip_id)
        else:
            processed += 1
    entry.output_paths.append(str(cache.root))
    result = {
        "processed": processed,
        "skipped_cached": skipped,
        "failed": len(failures),
        "failures": failures,
        "cache_dir": str(cache.root),
        "dsp_config_hash": cache.cfg_hash,
    }
    if failures:
        raise _PartialFailure(result)
    return result


class _PartialFailure(Exception):
    """Some clips failed; carries the partial result for reporting."""

    def __init__(self, result: dict):
        super().__init__(f"{result['failed']} clip(s) failed preprocessing")
        self.result = result


def cmd_train(args, entry: RunManifest) -> dict:
    from tajweed.cache import TensorCache
    from tajweed.evaluate import export_learning_curves
    from tajweed.model import build_model
    from tajweed.train import train

    flat = load_config(args.config).to_flat_dict()
    for key in ("epochs", "seed", "batch_size", "learning_rate"):
        value = getattr(args, key)
        if value is not None:
            flat[key] = value
    if args.no_pretrained:
        flat["pretrained"] = False
    cfg = PipelineConfig.from_flat_dict(flat)

    records = load_corpus(args.root, args.labels)
    split = split_dataset(records, cfg.train.seed)
    cache = TensorCache(args.cache or Path(args.root) / "cache", cfg.dsp)

    runs_dir = Path(args.runs)
    run_dir = runs_dir / time.strftime("%Y%m%d-%H%M%S")
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(cfg, run_dir / "config.yaml")  # effective config, overrides applied
    write_split_manifest(split, run_dir / "split.csv")
    _hash_if_exists(entry, "config", args.config)
    _hash_if_exists(entry, "labels", args.labels or Path(args.root) / "labels.csv")
    entry.seed = cfg.train.seed
    entry.output_paths.append(str(run_dir))

    model = build_model(cfg.model, seed=cfg.train.seed)
    extras = {
        "dsp": {k: v for k, v in cfg.to_flat_dict().items() if _is_dsp_key(k)},
        "label_order": list(RULE_KEYS),
    }
    _, history = train(model, split, cache, cfg.train, run_dir=run_dir, extras=extras)
    summary = export_learning_curves(history, run_dir)
    final = history[-1]
    return {
        "run_dir": str(run_dir),
        "epochs": len(history),
        "final_train_loss": final.train_loss,
        "final_test_loss": final.test_loss,
        "final_accuracies": {k: a for k, a in zip(RULE_KEYS, final.accuracies)},
        "final_test_loss_is_minimum": summary["final_test_loss_is_minimum"],
        "checkpoint_final": str(run_dir / "checkpoint_final"),
        "checkpoint_best": str(run_dir / "checkpoint_best"),
    }


def _is_dsp_key(key: str) -> bool:
    from dataclasses import fields

    from tajweed.config import DspConfig

    return key in {f.name for f in fields(DspConfig)}


def cmd_evaluate(args, entry: RunManifest) -> dict:
    import numpy as np
    import torch

    from tajweed.cache import TensorCache
    from tajweed.checkpoint import load_checkpoint
    from tajweed.config import DspConfig
    from tajweed.evaluate import build_report, write_report
    from tajweed.train import predict_batch

    loaded = load_checkpoint(args.checkpoint)
    split_path = Path(args.split) if args.split else Path(args.checkpoint).parent / "split.csv"
    if not split_path.is_file():
        raise CorpusError(f"split manifest not found: {split_path} (pass --split)")
    records = load_corpus(args.root, args.labels)
    manifest = read_split_manifest(split_path)
    split = apply_split_manifest(records, manifest)
    subset = split.test if args.subset == "test" else split.train
    if not subset:
        raise CorpusError(f"split manifest has no {args.subset} clips for this corpus")

    dsp_flat = loaded.extras.get("dsp")
    dsp_cfg = DspConfig(**dsp_flat) if dsp_flat else DspConfig()
    cache = TensorCache(args.cache or Path(args.root) / "cache", dsp_cfg)

    preds = []
    labels = []
    for start in range(0, len(subset), 16):
        chunk = subset[start : start + 16]
        batch = torch.from_numpy(np.stack([cache.ensure(r)[0] for r in chunk]))
        verdicts, _ = predict_batch(loaded.model, batch)
        preds.append(verdicts.numpy().astype(np.int64))
        labels.extend(r.labels.as_tuple() for r in chunk)
    report = build_report(
        np.concatenate(preds),
        np.array(labels, dtype=np.int64),
        checkpoint_id=loaded.checksum,
        split_manifest_sha256=file_sha256(split_path),
    )
    out_path = Path(args.out) if args.out else Path(args.checkpoint).parent / "report.json"
    write_report(report, out_path)
    _hash_if_exists(entry, "checkpoint", args.checkpoint)
    _hash_if_exists(entry, "split", split_path)
    entry.output_paths.append(str(out_path))
    return {
        "subset": args.subset,
        "n_clips": report.n_clips,
        "accuracies": {k: a for k, a in zip(RULE_KEYS, report.accuracies)},
        "average_accuracy": report.average_accuracy,
        "exact_match_accuracy": report.exact_match_accuracy,
        "checkpoint_id": report.checkpoint_id,
        "report": str(out_path),
    }


def cmd_predict(args, entry: RunManifest) -> dict:
    import numpy as np
    import torch

    from tajweed.audio import read_wav
    from tajweed.checkpoint import load_checkpoint
    from tajweed.config import DspConfig
    from tajweed.dsp import preprocess_waveform
    from tajweed.train import predict_batch

    loaded = load_checkpoint(args.checkpoint)
    dsp_flat = loaded.extras.get("dsp")
    dsp_cfg = DspConfig(**dsp_flat) if dsp_flat else DspConfig()
    waveform = read_wav(args.wav)
    tensor = preprocess_waveform(waveform, dsp_cfg, provenance=Path(args.wav).stem)
    batch = torch.from_numpy(np.expand_dims(tensor.data, 0))
    verdicts, probabilities = predict_batch(loaded.model, batch)
    _hash_if_exists(entry, "checkpoint", args.checkpoint)
    _hash_if_exists(entry, "wav", args.wav)
    return {
        "clip": str(args.wav),
        "probabilities": {k: float(p) for k, p in zip(RULE_KEYS, probabilities[0])},
        "verdicts": {k: bool(v) for k, v in zip(RULE_KEYS, verdicts[0])},
        "model_id": loaded.checksum,
        "dsp_config_hash": dsp_cfg.cache_key(),
    }


def cmd_serve(args, entry: RunManifest) -> dict:
    from tajweed.checkpoint import checkpoint_id
    from tajweed.service import run_service

    _hash_if_exists(entry, "checkpoint", args.checkpoint)
    entry.input_hashes["checkpoint_id"] = checkpoint_id(args.checkpoint)
    run_service(
        args.checkpoint,
        host=args.host,
        port=args.port,
        allowed_origin=args.allowed_origin,
    )
    return {"served": str(args.checkpoint)}


def build_parser() -> _Parser:
    parser = _Parser(prog="tajweed", description="Tajweed recitation scoring pipeline")
    parser.add_argument("--version", action="version", version=f"tajweed {__version__}")
    parser.add_argument("--runs", default="runs", help="workspace for run outputs and the manifest log")
    parser.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="validate corpus layout, report stats, write the split manifest")
    p.add_argument("--root", required=True, help="corpus root (audio/ + labels.csv)")
    p.add_argument("--labels", default=None, help="labels CSV (default <root>/labels.csv)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None, help="split manifest path (default <root>/split.csv)")
    p.add_argument("--exclude-defective", action="store_true", help="drop known-defect rows instead of imputing")
    p.set_defaults(handler=cmd_prepare)

    p = sub.add_parser("preprocess", help="fill the tensor cache for every corpus clip")
    p.add_argument("--root", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--cache", default=None, help="cache dir (default <root>/cache)")
    p.set_defaults(handler=cmd_preprocess)

    p = sub.add_parser("train", help="train from a config file; writes a run directory")
    p.add_argument("--config", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--cache", default=None)
    p.add_argument("--epochs", type=int, default=None, help="override config epochs")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--no-pretrained", action="store_true", help="random-init backbone (no weight download)")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint against a committed split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--split", default=None, help="split manifest (default sibling of checkpoint)")
    p.add_argument("--cache", default=None)
    p.add_argument("--subset", choices=("train", "test"), default="test")
    p.add_argument("--out", default=None, help="report path (default sibling report.json)")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("predict", help="score one WAV file; prints JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("wav", help="path to a linear-PCM WAV file")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP scoring service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--allowed-origin", default=None, help="CORS origin for the practice UI")
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    entry = RunManifest(
        command=args.command,
        config_path=getattr(args, "config", None),
        seed=getattr(args, "seed", None),
    )
    status = EXIT_OK
    try:
        result = args.handler(args, entry)
        _emit(result, args.json or args.command == "predict")
    except _PartialFailure as exc:
        _emit(exc.result, args.json)
        print(f"error: {exc}", file=sys.stderr)
        status = EXIT_DATA
    except (ValueError, KeyError, TypeError, FileNotFoundError) as exc:
        # CorpusError, WavFormatError, CacheFormatError, CheckpointError and
        # malformed configs all land here: the inputs are bad, not the run
        print(f"error: {exc}", file=sys.stderr)
        status = EXIT_DATA
    except KeyboardInterrupt:
        status = EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - stable exit-code contract
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = EXIT_RUNTIME
    finally:
        entry.exit_status = status
        _append_manifest(Path(args.runs), entry)
    return status


if __name__ == "__main__":
    sys.exit(main())
