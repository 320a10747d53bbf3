"""The classifier: EfficientNet-B0 features, global average pooling, a
squeeze-and-excitation gate on the pooled 1280-vector, dropout, and a
3-logit head.

Inputs are channels-last (batch, 224, 224, 3) tensors as produced by the
DSP frontend; the forward pass permutes to torch's NCHW layout internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torchvision

from tajweed.config import ModelConfig, SEPlacement


class WeightsUnavailableError(RuntimeError):
    """Pretrained backbone weights could not be loaded or fetched."""


@dataclass
class SEBlockParams:
    """Weights of the channel gate, as plain tensors."""

    reduce_weight: torch.Tensor  # (C/r, C)
    reduce_bias: torch.Tensor  # (C/r,)
    expand_weight: torch.Tensor  # (C, C/r)
    expand_bias: torch.Tensor  # (C,)


def se_gate(v: torch.Tensor, p: SEBlockParams) -> torch.Tensor:
    """v * sigmoid(W2 @ relu(W1 @ v + b1) + b2), batched or single vector."""
    hidden = torch.relu(torch.nn.functional.linear(v, p.reduce_weight, p.reduce_bias))
    gates = torch.sigmoid(torch.nn.functional.linear(hidden, p.expand_weight, p.expand_bias))
    return v * gates


class SEGate(nn.Module):
    """Bottlenecked channel attention applied to a pooled feature vector."""

    def __init__(self, channels: int, reduction: int):
        super().__init__()
        if channels % reduction != 0:
            raise ValueError(f"channels {channels} not divisible by reduction {reduction}")
        self.fc_reduce = nn.Linear(channels, channels // reduction)
        self.fc_expand = nn.Linear(channels // reduction, channels)
        # default torch init draws weights uniformly within the fan-in bound;
        # biases are zeroed so untouched gates start at sigmoid(0) = 0.5
        nn.init.zeros_(self.fc_reduce.bias)
        nn.init.zeros_(self.fc_expand.bias)

    def params(self) -> SEBlockParams:
        return SEBlockParams(
            reduce_weight=self.fc_reduce.weight,
            reduce_bias=self.fc_reduce.bias,
            expand_weight=self.fc_expand.weight,
            expand_bias=self.fc_expand.bias,
        )

    def forward(self, v: torch.Tensor) -> torch.Tensor:
        return se_gate(v, self.params())


class TajweedClassifier(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        if cfg.se_placement is SEPlacement.BEFORE_POOL:
            raise NotImplementedError(
                "se_placement=before_pool is a reserved variant and is not built"
            )
        self.cfg = cfg
        self.features = _backbone_features(cfg.backbone)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.se = (
            SEGate(cfg.feature_channels, cfg.se_reduction)
            if cfg.se_placement is SEPlacement.AFTER_POOL
            else None
        )
        self.dropout = nn.Dropout(p=cfg.dropout_p)
        self.head = nn.Linear(cfg.feature_channels, cfg.n_outputs)
        nn.init.zeros_(self.head.bias)

    def pooled_features(self, batch: torch.Tensor) -> torch.Tensor:
        """(B, 1280) global-average-pooled backbone features."""
        if batch.ndim != 4 or batch.shape[1:] != (224, 224, 3):
            raise ValueError(
                f"expected input of shape (B, 224, 224, 3), got {tuple(batch.shape)}"
            )
        nchw = batch.permute(0, 3, 1, 2).contiguous()
        return self.pool(self.features(nchw)).flatten(1)

    def forward(self, batch: torch.Tensor) -> torch.Tensor:
        v = self.pooled_features(batch)
        if self.se is not None:
            v = self.se(v)
        return self.head(self.dropout(v))


def _backbone_features(name: str) -> nn.Module:
    if name != "efficientnet_b0":
        raise ValueError(f"unsupported backbone {name!r}; only efficientnet_b0 is built")
    return torchvision.models.efficientnet_b0(weights=None).features


def build_model(cfg: ModelConfig, seed: int | None = None) -> TajweedClassifier:
    """Construct the classifier; fetch ImageNet backbone weights if asked.

    All backbone parameters stay trainable. SE and head weights are always
    freshly initialized; pass a seed to pin them (reseeds torch's global
    generator, same idiom as the training loop).
    """
    if seed is not None:
        torch.manual_seed(seed)
    model = TajweedClassifier(cfg)
    if cfg.pretrained:
        weights = torchvision.models.EfficientNet_B0_Weights.IMAGENET1K_V1
        try:
            reference = torchvision.models.efficientnet_b0(weights=weights)
        except Exception as exc:
            raise WeightsUnavailableError(
                f"could not load pretrained efficientnet_b0 weights from {weights.url} "
                f"(or the local torch hub cache): {exc}"
            ) from exc
        model.features.load_state_dict(reference.features.state_dict())
    for p in model.parameters():
        p.requires_grad_(True)
    return model
