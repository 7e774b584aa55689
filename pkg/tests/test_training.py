"""Training harness: losses, hashing, determinism, caching, frozen guard."""

import dataclasses

import numpy as np
import pytest
import torch

from tgfc import data
from tgfc.datamodel import ChannelMask, DataError, FeatureTensor
from tgfc.training import (
    EpochRecord,
    FrozenWeightsError,
    TrainConfig,
    TrainReport,
    ablation_variant,
    backbone_for,
    config_hash,
    load_fcnn,
    load_irnn,
    loss_dist,
    loss_task,
    loss_total,
    run_lambda_sweep,
    mean_density_by_lambda,
    train_fcnn,
    train_fcnn_full,
    train_irnn_full,
    with_ablation,
)


class TestLosses:
    def test_loss_task_adds_density_pressure(self):
        m = ChannelMask(np.array([1, 1, 0, 0], np.uint8))
        assert loss_task(2.0, m, lam=3.0) == pytest.approx(2.0 + 3.0 * 0.5)
        assert loss_task(2.0, m, lam=0.0) == 2.0

    def test_loss_task_rejects_negative_lam(self):
        with pytest.raises(DataError):
            loss_task(1.0, ChannelMask(np.array([1], np.uint8)), lam=-1.0)

    def test_loss_dist_is_mse(self):
        a = FeatureTensor(np.zeros((2, 2, 2)))
        b = FeatureTensor(np.full((2, 2, 2), 2.0))
        assert loss_dist(a, b) == pytest.approx(4.0)
        assert loss_dist(a, a) == 0.0

    def test_loss_total_combines(self):
        assert loss_total(1.5, 2.0, alpha=0.5) == pytest.approx(2.5)
        with pytest.raises(DataError):
            loss_total(1.0, 1.0, alpha=-0.1)


class TestConfig:
    def test_validation(self):
        with pytest.raises(DataError):
            TrainConfig(lam=-1.0)
        with pytest.raises(DataError):
            TrainConfig(lr=0.0)
        with pytest.raises(DataError):
            TrainConfig(epochs=-1)
        with pytest.raises(DataError):
            TrainConfig(fixed_density=1.5)

    def test_zero_epochs_allowed(self):
        assert TrainConfig(epochs=0).epochs == 0

    def test_json_roundtrip(self):
        cfg = TrainConfig(lam=2.5, fixed_density=0.25, texture_on=False)
        assert TrainConfig.from_json(cfg.to_json()) == cfg

    def test_hash_is_stable_and_sensitive(self):
        a = TrainConfig()
        assert config_hash(a) == config_hash(TrainConfig())
        assert len(config_hash(a)) == 12
        assert config_hash(a) != config_hash(TrainConfig(lam=a.lam + 1))

    def test_ablation_method_numbers(self):
        assert ablation_variant(False, False).method_number == 1
        assert ablation_variant(True, False).method_number == 2
        assert ablation_variant(False, True).method_number == 3
        assert ablation_variant(True, True).method_number == 4

    def test_with_ablation_overrides_flags(self):
        cfg = with_ablation(TrainConfig(), ablation_variant(False, True))
        assert not cfg.texture_on and cfg.frm_on


class TestEpochRecord:
    def test_rejects_out_of_range_density(self):
        with pytest.raises(DataError):
            EpochRecord(0, 1.0, 1.5, 0.0, 50.0, 0.5)
        with pytest.raises(DataError):
            EpochRecord(0, 1.0, 0.5, 0.0, 50.0, -0.1)


def test_report_csv_and_json_roundtrip(tmp_path):
    rec = EpochRecord(0, 1.25, 0.5, 0.125, 80.0, 0.5)
    rep = TrainReport("fcnn", "abc123def456", (rec,))
    assert TrainReport.from_json(rep.to_json()) == rep
    lines = rep.to_csv().strip().split("\n")
    assert lines[0] == "epoch,task_loss,sparsity,perceptual_loss,val_metric,val_density"
    assert lines[1].startswith("0,1.25,0.5,0.125,80.0,0.5")
    rep.write(tmp_path)
    assert (tmp_path / "fcnn-abc123def456.csv").exists()
    assert (tmp_path / "fcnn-abc123def456.txt").exists()


def test_empty_report_has_nan_metric():
    rep = TrainReport("irnn", "x", ())
    assert rep.final_density == 0.0
    assert np.isnan(rep.final_metric)


def test_backbone_for_loads_weights(small_cfg):
    bb = backbone_for(small_cfg)
    assert bb.config.weights_path == small_cfg.backbone_weights


def test_fcnn_training_is_deterministic(small_cfg):
    a = train_fcnn_full(small_cfg)
    b = train_fcnn_full(small_cfg)
    assert a.report.records == b.report.records
    for pa, pb in zip(a.scorer.parameters(), b.scorer.parameters()):
        assert torch.equal(pa, pb)


def test_fcnn_checkpoint_cache_roundtrip(small_cfg, fcnn_small, cache_dir):
    again = train_fcnn_full(small_cfg, cache_dir=cache_dir)
    assert again.report == fcnn_small.report
    loaded = load_fcnn(cache_dir / f"fcnn-{config_hash(small_cfg)}.pt",
                       backbone_for(small_cfg))
    assert loaded.report.records == fcnn_small.report.records
    for pa, pb in zip(loaded.scorer.parameters(), fcnn_small.scorer.parameters()):
        assert torch.equal(pa, pb)


def test_train_fcnn_returns_report_only(small_cfg):
    rep = train_fcnn(small_cfg)
    assert rep.kind == "fcnn"
    assert len(rep.records) == small_cfg.epochs


def test_fcnn_seed_changes_trajectory(small_cfg):
    b = train_fcnn_full(dataclasses.replace(small_cfg, seed=small_cfg.seed + 1))
    a = train_fcnn_full(small_cfg)
    assert a.report.records != b.report.records


def test_frozen_guard_rejects_trainable_backbone(small_cfg):
    from tgfc.training import _guard_frozen

    backbone = backbone_for(small_cfg)
    next(iter(backbone.layers.parameters())).requires_grad_(True)
    with pytest.raises(FrozenWeightsError):
        _guard_frozen(backbone)


def test_frozen_guard_detects_backbone_drift(small_cfg, monkeypatch):
    """Any in-place edit of backbone weights during training must abort the run."""
    import tgfc.training as T

    original = T._fcnn_validate

    def sabotage(backbone, *args, **kwargs):
        out = original(backbone, *args, **kwargs)
        with torch.no_grad():
            p = next(iter(backbone.layers.parameters()))
            p.add_(1.0)
        return out

    monkeypatch.setattr(T, "_fcnn_validate", sabotage)
    with pytest.raises(FrozenWeightsError):
        train_fcnn_full(dataclasses.replace(small_cfg, epochs=1))


def test_fixed_density_masks_have_exact_count(small_cfg):
    cfg = dataclasses.replace(small_cfg, fixed_density=0.25, epochs=1)
    art = train_fcnn_full(cfg)
    assert art.scorer is None  # nothing to learn about selection
    backbone = backbone_for(cfg)
    expect = round(0.25 * backbone.feature_channels)
    assert art.report.final_density == pytest.approx(expect / backbone.feature_channels)


def test_fixed_density_masks_shared_across_arms():
    """Method arms must see identical masks for a matched-density comparison."""
    from tgfc.training import _fixed_masks
    a = _fixed_masks(8, 16, 0.25, 1)
    b = _fixed_masks(8, 16, 0.25, 1)
    assert torch.equal(a, b)  # derived from the tag, not from any training state
    assert a.shape == (8, 16)
    assert a.sum(dim=1).eq(round(0.25 * 16)).all()
    c = _fixed_masks(8, 16, 0.25, 0)
    assert not torch.equal(a, c)


def test_irnn_training_deterministic_and_cached(small_cfg, cache_dir):
    a = train_irnn_full(small_cfg, cache_dir=cache_dir)
    b = train_irnn_full(small_cfg, cache_dir=cache_dir)
    assert a.report.records == b.report.records
    loaded = load_irnn(cache_dir / f"irnn-{config_hash(small_cfg)}.pt",
                       backbone_for(small_cfg))
    for pa, pb in zip(loaded.net.parameters(), a.net.parameters()):
        assert torch.equal(pa, pb)


def test_irnn_zero_epochs_keeps_bilinear_start(small_cfg):
    cfg = dataclasses.replace(small_cfg, epochs=0)
    art = train_irnn_full(cfg)
    assert art.report.records == ()
    with torch.no_grad():
        assert not art.net.final.weight.abs().sum().item()


def test_lambda_sweep_rows_cover_grid(small_cfg):
    rows = run_lambda_sweep(small_cfg, lams=[0.5, 5.0], seeds=[0, 1])
    assert len(rows) == 4
    assert {(r.lam, r.seed) for r in rows} == {(0.5, 0), (0.5, 1), (5.0, 0), (5.0, 1)}
    means = mean_density_by_lambda(rows)
    assert set(means) == {0.5, 5.0}
    for v in means.values():
        assert 0.0 <= v <= 1.0


def test_run_ablation_requires_fixed_density(small_cfg):
    from tgfc.training import run_ablation
    with pytest.raises(DataError):
        run_ablation(small_cfg, seeds=[0])


def test_load_checkpoint_rejects_config_mismatch(small_cfg, fcnn_small, cache_dir, tmp_path):
    import shutil
    src = cache_dir / f"fcnn-{config_hash(small_cfg)}.pt"
    other = dataclasses.replace(small_cfg, lam=small_cfg.lam + 1)
    dst = tmp_path / f"fcnn-{config_hash(other)}.pt"
    shutil.copy(src, dst)
    blob = torch.load(src, map_location="cpu", weights_only=False)
    assert TrainConfig.from_json(blob["config"]) == small_cfg


def test_dataset_id_rejected(small_cfg):
    with pytest.raises(DataError):
        train_fcnn_full(dataclasses.replace(small_cfg, dataset_id="nope"))
