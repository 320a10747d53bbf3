"""On-disk cache of preprocessed tensors.

One file per clip, named `<clip_id>.<cfg-hash>.mst`: an ASCII shape header
line (`224 224 3\\n`) followed by the raw little-endian float32 payload in
C order. Writes go through a temp file and an atomic rename, so concurrent
workers can insert-if-absent without coordination.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from tajweed.config import DspConfig
from tajweed.dsp import SpectrogramTensor, preprocess_clip


class CacheFormatError(ValueError):
    pass


def write_mst(path: Path | str, data: np.ndarray) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    header = ("%d %d %d\n" % data.shape).encode("ascii")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(data.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_mst(path: Path | str) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline()
        try:
            shape = tuple(int(tok) for tok in header.split())
        except ValueError:
            raise CacheFormatError(f"{path}: bad shape header {header!r}") from None
        if len(shape) != 3 or any(s <= 0 for s in shape):
            raise CacheFormatError(f"{path}: bad shape header {header!r}")
        payload = fh.read()
    expected = shape[0] * shape[1] * shape[2] * 4
    if len(payload) != expected:
        raise CacheFormatError(
            f"{path}: payload is {len(payload)} bytes, shape {shape} needs {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(shape)


class TensorCache:
    """Insert-if-absent tensor store keyed by (clip_id, DspConfig digest)."""

    def __init__(self, root: Path | str, cfg: DspConfig):
        self.root = Path(root)
        self.cfg = cfg
        self.cfg_hash = cfg.cache_key()
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, clip_id: str) -> Path:
        return self.root / f"{clip_id}.{self.cfg_hash}.mst"

    def has(self, clip_id: str) -> bool:
        return self.path_for(clip_id).is_file()

    def get(self, clip_id: str) -> np.ndarray:
        return read_mst(self.path_for(clip_id))

    def put(self, clip_id: str, data: np.ndarray) -> None:
        write_mst(self.path_for(clip_id), data)

    def ensure(self, record) -> tuple[np.ndarray, bool]:
        """Return the clip's tensor, preprocessing on a miss. True = was cached."""
        if self.has(record.clip_id):
            return self.get(record.clip_id), True
        tensor: SpectrogramTensor = preprocess_clip(record, self.cfg)
        self.put(record.clip_id, tensor.data)
        return tensor.data, False
