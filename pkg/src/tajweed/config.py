"""Pinned configuration for the DSP frontend, the model, and training.

All hyperparameters live in three frozen dataclasses. A run's effective
configuration is serialized as one flat key/value YAML document whose keys
mirror the dataclass fields exactly; field names are unique across the
three sections, so the flat layout is unambiguous.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path

import yaml


class SEPlacement(str, Enum):
    NONE = "none"
    AFTER_POOL = "after_pool"
    # Reserved name: building with this placement fails loudly on purpose.
    BEFORE_POOL = "before_pool"


@dataclass(frozen=True)
class DspConfig:
    """Waveform-to-tensor frontend parameters."""

    target_rate_hz: int = 11025
    n_fft: int = 1024
    hop: int = 256
    n_mels: int = 224
    f_min_hz: float = 0.0
    f_max_hz: float = 4000.0
    log_offset: float = 1e-6
    out_frames: int = 224
    window: str = "hann"
    spectrum_power: int = 2

    def __post_init__(self):
        if not (self.f_min_hz < self.f_max_hz <= self.target_rate_hz / 2):
            raise ValueError(
                f"need f_min < f_max <= rate/2, got "
                f"{self.f_min_hz}, {self.f_max_hz}, {self.target_rate_hz}"
            )
        if self.hop > self.n_fft:
            raise ValueError(f"hop {self.hop} exceeds n_fft {self.n_fft}")
        if self.n_mels != 224 or self.out_frames != 224:
            raise ValueError("model input is fixed at 224x224; n_mels and out_frames must be 224")

    def cache_key(self) -> str:
        """Short stable digest identifying this configuration."""
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True)
class ModelConfig:
    """Classifier architecture parameters."""

    backbone: str = "efficientnet_b0"
    pretrained: bool = True
    feature_channels: int = 1280
    se_placement: SEPlacement = SEPlacement.AFTER_POOL
    se_reduction: int = 16
    dropout_p: float = 0.7
    n_outputs: int = 3

    def __post_init__(self):
        # tolerate plain strings from config files
        if not isinstance(self.se_placement, SEPlacement):
            object.__setattr__(self, "se_placement", SEPlacement(self.se_placement))
        if self.feature_channels % self.se_reduction != 0:
            raise ValueError(
                f"feature_channels {self.feature_channels} not divisible "
                f"by se_reduction {self.se_reduction}"
            )
        if self.n_outputs != 3:
            raise ValueError("the classifier scores exactly 3 rules")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization parameters."""

    seed: int
    optimizer: str = "adam"
    learning_rate: float = 1e-4
    epochs: int = 40
    batch_size: int = 16
    loss_weights: tuple[float, float, float] = (1.0, 0.19, 0.95)
    threshold: float = 0.5

    def __post_init__(self):
        if not isinstance(self.loss_weights, tuple):
            object.__setattr__(self, "loss_weights", tuple(float(w) for w in self.loss_weights))
        if any(w <= 0 for w in self.loss_weights):
            raise ValueError(f"loss weights must all be positive, got {self.loss_weights}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.seed is None:
            raise ValueError("seed is required; there is no implicit randomness")

    @property
    def pos_weights(self) -> tuple[float, float, float]:
        from tajweed.train import compute_pos_weights

        return compute_pos_weights(self.loss_weights)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs, serializable as one flat document."""

    dsp: DspConfig = field(default_factory=DspConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=lambda: TrainConfig(seed=42))

    def to_flat_dict(self) -> dict:
        out: dict = {}
        for section in (self.dsp, self.model, self.train):
            for f in fields(section):
                value = getattr(section, f.name)
                if isinstance(value, Enum):
                    value = value.value
                elif isinstance(value, tuple):
                    value = list(value)
                out[f.name] = value
        return out

    @classmethod
    def from_flat_dict(cls, flat: dict) -> "PipelineConfig":
        flat = dict(flat)
        kwargs = {}
        for name, section_cls in (("dsp", DspConfig), ("model", ModelConfig), ("train", TrainConfig)):
            names = {f.name for f in fields(section_cls)}
            section_kwargs = {k: flat.pop(k) for k in list(flat) if k in names}
            kwargs[name] = section_cls(**section_kwargs)
        if flat:
            raise ValueError(f"unknown config keys: {sorted(flat)}")
        return cls(**kwargs)


def save_config(cfg: PipelineConfig, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_flat_dict(), fh, sort_keys=True)


def load_config(path: Path | str) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        flat = yaml.safe_load(fh)
    if not isinstance(flat, dict):
        raise ValueError(f"config file {path} is not a key/value document")
    return PipelineConfig.from_flat_dict(flat)


def file_sha256(path: Path | str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
