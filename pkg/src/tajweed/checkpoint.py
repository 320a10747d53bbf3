"""Versioned checkpoint container.

Layout of a `.ckpt` file:

    magic   b"TJWCHKPT"                      8 bytes
    version uint32 little-endian             4 bytes
    hlen    uint64 little-endian             8 bytes
    header  UTF-8 JSON                       hlen bytes
    payload raw tensor bytes, little-endian
    digest  SHA-256 of everything above     32 bytes

The header holds the model configuration, optional extra metadata (DSP and
training configs, label order), and an index of named tensors with dtype,
shape, and offset into the payload. Float tensors are stored as 32-bit
floats, integer buffers as 64-bit ints. The digest doubles as the model id
reported by the serving layer.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from tajweed.config import ModelConfig
from tajweed.model import TajweedClassifier

MAGIC = b"TJWCHKPT"
FORMAT_VERSION = 1

_DTYPES = {torch.float32: "<f4", torch.int64: "<i8"}
_NP_DTYPES = {"<f4": np.dtype("<f4"), "<i8": np.dtype("<i8")}


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class LoadedCheckpoint:
    model: TajweedClassifier
    config: ModelConfig
    checksum: str
    extras: dict


def save_checkpoint(model: TajweedClassifier, path: Path | str, extras: dict | None = None) -> str:
    """Serialize the model; returns the file's integrity checksum (model id)."""
    index = []
    chunks = []
    offset = 0
    for name, tensor in model.state_dict().items():
        if tensor.dtype not in _DTYPES:
            raise CheckpointError(f"tensor {name} has unsupported dtype {tensor.dtype}")
        dtype = _DTYPES[tensor.dtype]
        blob = tensor.detach().cpu().numpy().astype(_NP_DTYPES[dtype], copy=False).tobytes()
        index.append(
            {"name": name, "dtype": dtype, "shape": list(tensor.shape), "offset": offset}
        )
        chunks.append(blob)
        offset += len(blob)

    cfg = asdict(model.cfg)
    cfg["se_placement"] = model.cfg.se_placement.value
    header = json.dumps(
        {"format_version": FORMAT_VERSION, "model_config": cfg, "extras": extras or {}, "tensors": index},
        sort_keys=True,
    ).encode("utf-8")

    body = MAGIC + struct.pack("<I", FORMAT_VERSION) + struct.pack("<Q", len(header)) + header
    body += b"".join(chunks)
    digest = hashlib.sha256(body).digest()
    Path(path).write_bytes(body + digest)
    return digest.hex()


def _element_count(shape: list[int]) -> int:
    n = 1
    for s in shape:
        n *= s
    return n


def load_checkpoint(path: Path | str) -> LoadedCheckpoint:
    """Rebuild the model from a checkpoint file, verifying integrity.

    The architecture configuration always comes from the file itself.
    """
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 12 + 32 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: integrity checksum mismatch (file corrupted)")

    pos = len(MAGIC)
    (version,) = struct.unpack_from("<I", body, pos)
    pos += 4
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {version} not supported (expected {FORMAT_VERSION})"
        )
    (hlen,) = struct.unpack_from("<Q", body, pos)
    pos += 8
    try:
        header = json.loads(body[pos : pos + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header: {exc}") from exc
    payload = body[pos + hlen :]

    cfg_dict = dict(header["model_config"])
    cfg_dict["pretrained"] = False  # weights come from this file, never the network
    cfg = ModelConfig(**cfg_dict)
    model = TajweedClassifier(cfg)

    state = {}
    for entry in header["tensors"]:
        dtype = _NP_DTYPES.get(entry["dtype"])
        if dtype is None:
            raise CheckpointError(f"{path}: unknown tensor dtype {entry['dtype']!r}")
        nbytes = _element_count(entry["shape"]) * dtype.itemsize
        start = entry["offset"]
        if start < 0 or start + nbytes > len(payload):
            raise CheckpointError(
                f"{path}: tensor {entry['name']} (shape {entry['shape']}) "
                f"overruns the payload; header is inconsistent"
            )
        arr = np.frombuffer(payload, dtype=dtype, count=_element_count(entry["shape"]), offset=start)
        state[entry["name"]] = torch.from_numpy(arr.reshape(entry["shape"]).copy())

    try:
        model.load_state_dict(state, strict=True)
    except RuntimeError as exc:
        raise CheckpointError(f"{path}: checkpoint does not match its declared config: {exc}") from exc
    model.eval()
    return LoadedCheckpoint(
        model=model,
        config=cfg,
        checksum=digest.hex(),
        extras=header.get("extras", {}),
    )


def checkpoint_id(path: Path | str) -> str:
    """Integrity checksum of a checkpoint file, without building the model."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 12 + 32 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: integrity checksum mismatch (file corrupted)")
    return digest.hex()
