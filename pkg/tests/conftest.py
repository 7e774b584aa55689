"""Shared fixtures: a pretrained frozen backbone and small trained artifacts.

Training fixtures are session-scoped so the cost is paid once per run; every
consumer sees the same frozen weights, which keeps cross-test results stable.
"""

import numpy as np
import pytest

from tgfc import data
from tgfc.backbone import BackboneConfig, split_at
from tgfc.datamodel import ChannelMask, FeatureTensor
from tgfc.training import TrainConfig, pretrain_backbone, train_fcnn_full


@pytest.fixture(scope="session")
def weights_path(tmp_path_factory):
    out = tmp_path_factory.mktemp("weights") / "backbone.pt"
    path, acc = pretrain_backbone(BackboneConfig(), data.DatasetConfig(), out, epochs=12)
    assert acc >= 99.0, "corpus must be separable for downstream tests to mean anything"
    return str(path)


@pytest.fixture(scope="session")
def backbone(weights_path):
    return split_at(BackboneConfig(weights_path=weights_path))


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("checkpoints")


@pytest.fixture(scope="session")
def small_cfg(weights_path):
    return TrainConfig(epochs=2, train_size=64, val_size=32,
                       backbone_weights=weights_path)


@pytest.fixture(scope="session")
def fcnn_small(small_cfg, cache_dir):
    return train_fcnn_full(small_cfg, cache_dir=cache_dir)


def rand_features(rng: np.random.Generator, channels: int = 8, height: int = 4,
                  width: int = 4, scale: float = 5.0) -> FeatureTensor:
    return FeatureTensor(rng.uniform(0.0, scale, size=(channels, height, width)))


def rand_mask(rng: np.random.Generator, channels: int = 8) -> ChannelMask:
    return ChannelMask(rng.integers(0, 2, size=channels).astype(np.float64))
