"""Pretrained classification backbones split into a feature head and a task tail.

A backbone is one ordered, named layer stack; splitting keeps a single module
list and an index, so running head-then-tail is the very same op sequence as
the unsplit forward and the two agree bitwise.  All parameters are frozen:
nothing in this artifact ever updates them, and :func:`param_checksum` lets
training loops prove it.
"""

from __future__ import annotations

import hashlib
import json
from collections import OrderedDict
from dataclasses import dataclass, asdict
from typing import Callable

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .datamodel import ConfigurationError, DimensionError, FeatureTensor, SourceImage

__all__ = [
    "ConfigurationError",
    "BackboneConfig",
    "TaskResult",
    "SplitBackbone",
    "split_at",
    "register_backbone",
    "available_backbones",
    "build_layers",
    "param_checksum",
]


@dataclass
class BackboneConfig:
    """Everything needed to rebuild a backbone, serialized with experiments."""

    model_id: str = "tinyvgg10"
    split_layer: str = "pool2"
    input_size: int = 32
    num_classes: int = 10
    normalize_mean: tuple[float, float, float] = (0.5, 0.5, 0.5)
    normalize_std: tuple[float, float, float] = (0.25, 0.25, 0.25)
    weights_path: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "BackboneConfig":
        raw = json.loads(text)
        raw["normalize_mean"] = tuple(raw["normalize_mean"])
        raw["normalize_std"] = tuple(raw["normalize_std"])
        return cls(**raw)


@dataclass(frozen=True)
class TaskResult:
    logits: np.ndarray
    predicted_class: int


def _conv(cin: int, cout: int) -> nn.Conv2d:
    return nn.Conv2d(cin, cout, kernel_size=3, padding=1)


def build_tinyvgg10(cfg: BackboneConfig) -> nn.Sequential:
    """Small VGG-style stack for 32x32 inputs; pool1/pool2/pool3 are split points."""
    return nn.Sequential(OrderedDict([
        ("conv1_1", _conv(3, 16)), ("relu1_1", nn.ReLU()),
        ("conv1_2", _conv(16, 16)), ("relu1_2", nn.ReLU()),
        ("pool1", nn.MaxPool2d(2)),
        ("conv2_1", _conv(16, 32)), ("relu2_1", nn.ReLU()),
        ("conv2_2", _conv(32, 32)), ("relu2_2", nn.ReLU()),
        ("pool2", nn.MaxPool2d(2)),
        ("conv3_1", _conv(32, 48)), ("relu3_1", nn.ReLU()),
        ("pool3", nn.MaxPool2d(2)),
        ("flatten", nn.Flatten()),
        ("fc1", nn.Linear(48 * (cfg.input_size // 8) ** 2, 128)), ("relu_fc1", nn.ReLU()),
        ("fc2", nn.Linear(128, cfg.num_classes)),
    ]))


def build_vgg16(cfg: BackboneConfig) -> nn.Sequential:
    """The classic 13-conv/5-pool stack with the fully connected classifier.

    Weights must be supplied via ``cfg.weights_path`` (a state dict for this
    named layout, or a stock torchvision vgg16 state dict, which is remapped
    by position).
    """
    widths = [(3, 64, 2), (64, 128, 2), (128, 256, 3), (256, 512, 3), (512, 512, 3)]
    layers: list[tuple[str, nn.Module]] = []
    for block, (cin, cout, n) in enumerate(widths, start=1):
        for i in range(1, n + 1):
            layers.append((f"conv{block}_{i}", _conv(cin if i == 1 else cout, cout)))
            layers.append((f"relu{block}_{i}", nn.ReLU()))
        layers.append((f"pool{block}", nn.MaxPool2d(2)))
    layers += [
        ("avgpool", nn.AdaptiveAvgPool2d(7)),
        ("flatten", nn.Flatten()),
        ("fc1", nn.Linear(512 * 7 * 7, 4096)), ("relu_fc1", nn.ReLU()), ("drop1", nn.Dropout()),
        ("fc2", nn.Linear(4096, 4096)), ("relu_fc2", nn.ReLU()), ("drop2", nn.Dropout()),
        ("fc3", nn.Linear(4096, cfg.num_classes)),
    ]
    return nn.Sequential(OrderedDict(layers))


_BUILDERS: dict[str, Callable[[BackboneConfig], nn.Sequential]] = {
    "tinyvgg10": build_tinyvgg10,
    "vgg16": build_vgg16,
}


def register_backbone(model_id: str, builder: Callable[[BackboneConfig], nn.Sequential]) -> None:
    _BUILDERS[model_id] = builder


def build_layers(cfg: BackboneConfig) -> nn.Sequential:
    """Fresh unsplit layer stack for the configured model (no weight loading)."""
    if cfg.model_id not in _BUILDERS:
        raise ConfigurationError(
            f"unknown backbone {cfg.model_id!r}; have {available_backbones()}")
    return _BUILDERS[cfg.model_id](cfg)


def available_backbones() -> list[str]:
    return sorted(_BUILDERS)


def _load_weights(layers: nn.Sequential, path: str) -> None:
    state = torch.load(path, map_location="cpu", weights_only=True)
    if isinstance(state, dict) and "state_dict" in state:
        state = state["state_dict"]
    own = layers.state_dict()
    if set(state) == set(own):
        layers.load_state_dict(state)
        return
    # positional remap (torchvision-style "features.0.weight" keys)
    src = [state[k] for k in state if k.endswith((".weight", ".bias"))]
    dst_keys = [k for k in own if k.endswith((".weight", ".bias"))]
    if len(src) != len(dst_keys):
        raise ConfigurationError(
            f"cannot map {len(src)} weight tensors onto {len(dst_keys)} parameters")
    layers.load_state_dict({k: v for k, v in zip(dst_keys, src)})


class SplitBackbone:
    """A frozen backbone with a named split into head (feature extractor) and tail."""

    def __init__(self, config: BackboneConfig, layers: nn.Sequential, split_index: int):
        self.config = config
        self.layers = layers
        self.split_index = split_index
        self.layers.eval()
        for p in self.layers.parameters():
            p.requires_grad_(False)
        mean = torch.tensor(config.normalize_mean).view(1, 3, 1, 1)
        std = torch.tensor(config.normalize_std).view(1, 3, 1, 1)
        self._mean, self._std = mean, std
        self._feature_shape: tuple[int, int, int] | None = None

    # --- batch-level tensor API (used by training loops) ---

    def normalize_batch(self, imgs: torch.Tensor) -> torch.Tensor:
        return (imgs - self._mean.to(imgs.dtype)) / self._std.to(imgs.dtype)

    def head_batch(self, imgs: torch.Tensor) -> torch.Tensor:
        x = self.normalize_batch(imgs)
        for mod in list(self.layers.children())[: self.split_index]:
            x = mod(x)
        return x

    def tail_batch(self, feats: torch.Tensor) -> torch.Tensor:
        x = feats
        for mod in list(self.layers.children())[self.split_index:]:
            x = mod(x)
        return x

    def full_batch(self, imgs: torch.Tensor) -> torch.Tensor:
        x = self.normalize_batch(imgs)
        for mod in self.layers.children():
            x = mod(x)
        return x

    # --- single-image value API ---

    def _to_batch(self, img: SourceImage) -> torch.Tensor:
        if img.height != self.config.input_size or img.width != self.config.input_size:
            raise DimensionError(
                f"backbone expects {self.config.input_size}x{self.config.input_size} input, "
                f"got {img.height}x{img.width}")
        return torch.from_numpy(img.pixels.astype(np.float32)).unsqueeze(0)

    def extract_hq(self, img: SourceImage) -> FeatureTensor:
        """Features of the clean source image."""
        with torch.no_grad():
            f = self.head_batch(self._to_batch(img))
        return FeatureTensor(f.squeeze(0).numpy())

    def extract_lq(self, lr_img: SourceImage, scale: int) -> FeatureTensor:
        """Features of the decoded low-resolution texture, upsampled back first."""
        if scale < 1:
            raise ConfigurationError(f"scale must be >= 1, got {scale}")
        up_h, up_w = lr_img.height * scale, lr_img.width * scale
        if up_h != self.config.input_size or up_w != self.config.input_size:
            raise DimensionError(
                f"{lr_img.height}x{lr_img.width} texture at scale {scale} gives {up_h}x{up_w}, "
                f"backbone expects {self.config.input_size}")
        x = torch.from_numpy(lr_img.pixels.astype(np.float32)).unsqueeze(0)
        if scale > 1:
            x = F.interpolate(x, scale_factor=scale, mode="bilinear", align_corners=False)
        with torch.no_grad():
            f = self.head_batch(x)
        return FeatureTensor(f.squeeze(0).numpy())

    def infer_tail(self, f: FeatureTensor) -> TaskResult:
        if f.shape != self.feature_shape():
            raise DimensionError(
                f"tail expects {self.feature_shape()} features, got {f.shape}")
        x = torch.from_numpy(f.data.astype(np.float32)).unsqueeze(0)
        with torch.no_grad():
            logits = self.tail_batch(x)
        logits = logits.squeeze(0).numpy()
        return TaskResult(logits, int(np.argmax(logits)))

    def full_infer(self, img: SourceImage) -> TaskResult:
        with torch.no_grad():
            logits = self.full_batch(self._to_batch(img))
        logits = logits.squeeze(0).numpy()
        return TaskResult(logits, int(np.argmax(logits)))

    @property
    def feature_channels(self) -> int:
        return self.feature_shape()[0]

    def feature_shape(self) -> tuple[int, int, int]:
        if self._feature_shape is None:
            with torch.no_grad():
                probe = torch.zeros(1, 3, self.config.input_size, self.config.input_size)
                self._feature_shape = tuple(self.head_batch(probe).shape[1:])
        return self._feature_shape

    def layer_names(self) -> list[str]:
        return [name for name, _ in self.layers.named_children()]


def split_at(config: BackboneConfig, layer: str | None = None) -> SplitBackbone:
    """Build the configured backbone and split it after the named layer."""
    if config.model_id not in _BUILDERS:
        raise ConfigurationError(
            f"unknown backbone {config.model_id!r}; have {available_backbones()}")
    layer = layer or config.split_layer
    layers = _BUILDERS[config.model_id](config)
    if config.weights_path:
        _load_weights(layers, config.weights_path)
    names = [name for name, _ in layers.named_children()]
    if layer not in names:
        raise ConfigurationError(f"layer {layer!r} not in {config.model_id}: {names}")
    return SplitBackbone(config, layers, names.index(layer) + 1)


def param_checksum(module: nn.Module) -> str:
    """Order-sensitive digest of all parameters and buffers; frozen-weight proof."""
    h = hashlib.sha256()
    for name, t in list(module.state_dict().items()):
        h.update(name.encode())
        h.update(t.detach().cpu().numpy().tobytes())
    return h.hexdigest()
