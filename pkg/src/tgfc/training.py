"""Training loops for the selection/restoration stack and the preview network.

Both loops follow the same conventions: the backbone is frozen and checksummed
before and after, features are precomputed once per corpus so epochs are cheap,
runs are bitwise reproducible given the config (single-threaded torch, every
random draw seeded from the config), and checkpoints/reports are cached under
a content hash of the config.

During selection training the feature codec is the identity: quantization and
tiling only enter at evaluation time.  The texture stream is always the real
codec round trip at the configured quality.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from . import data
from .backbone import BackboneConfig, SplitBackbone, build_layers, param_checksum, split_at
from .datamodel import (
    ChannelMask,
    DataError,
    DimensionError,
    FeatureTensor,
    apply_mask,
    mask_mean,
)
from .pipeline import texture_roundtrip
from .restoration import Frm, fill_missing, reconstruct
from .selection import ChannelScorer, GumbelConfig, gumbel_sample, select_channels_argmax
from .upscaler import Irnn, IrnnConfig, inject_level_for

__all__ = [
    "FrozenWeightsError",
    "TrainConfig",
    "AblationConfig",
    "EpochRecord",
    "TrainReport",
    "loss_task",
    "loss_dist",
    "loss_total",
    "ablation_variant",
    "config_hash",
    "pretrain_backbone",
    "FcnnArtifacts",
    "train_fcnn_full",
    "train_fcnn",
    "IrnnArtifacts",
    "train_irnn_full",
    "train_irnn",
    "backbone_for",
    "irnn_features",
    "SweepRow",
    "run_lambda_sweep",
    "AblationRow",
    "run_ablation",
]


class FrozenWeightsError(RuntimeError):
    """The backbone changed (or was trainable) during a loop that must not touch it."""


@dataclass(frozen=True)
class TrainConfig:
    """One reproducible training run; hashable for checkpoint caching.

    ``lam`` is the selection-rate weight and ``alpha`` the feature-distortion
    weight of the combined loss.  ``epochs == 0`` is allowed as a diagnostic
    (report with no epoch records, checkpoint equals the initialization).
    """

    lam: float = 3.0
    alpha: float = 0.5
    lr: float = 1e-4
    epochs: int = 300
    batch: int = 32
    seed: int = 0
    tau: float = 1.0
    dataset_id: str = "synth10"
    backbone_id: str = "tinyvgg10"
    backbone_weights: str | None = None
    texture_quality: int = 24
    texture_scale: int = 2
    train_size: int = 512
    val_size: int = 128
    data_seed: int = 0
    modulate: str = "reconstructed"
    texture_on: bool = True
    frm_on: bool = True
    fixed_density: float | None = None
    features_off: bool = False
    irnn_depth: int = 2
    irnn_width: int = 8

    def __post_init__(self) -> None:
        if self.lam < 0 or self.alpha < 0:
            raise DataError(f"lam/alpha must be >= 0, got {self.lam}/{self.alpha}")
        if self.lr <= 0:
            raise DataError(f"lr must be > 0, got {self.lr}")
        if self.epochs < 0:
            raise DataError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch < 1:
            raise DataError(f"batch must be >= 1, got {self.batch}")
        if self.fixed_density is not None and not 0.0 <= self.fixed_density <= 1.0:
            raise DataError(f"fixed_density must be in [0, 1], got {self.fixed_density}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class AblationConfig:
    texture_on: bool
    frm_on: bool

    @property
    def method_number(self) -> int:
        return {(False, False): 1, (True, False): 2,
                (False, True): 3, (True, True): 4}[(self.texture_on, self.frm_on)]


def ablation_variant(texture_on: bool, frm_on: bool) -> AblationConfig:
    """Texture off fills dropped channels with zeros; FRM off skips enhancement."""
    return AblationConfig(texture_on, frm_on)


def with_ablation(cfg: TrainConfig, ab: AblationConfig) -> TrainConfig:
    return replace(cfg, texture_on=ab.texture_on, frm_on=ab.frm_on)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    task_loss: float
    sparsity: float
    perceptual_loss: float
    val_metric: float
    val_density: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.sparsity <= 1.0:
            raise DataError(f"sparsity must be in [0, 1], got {self.sparsity}")
        if not 0.0 <= self.val_density <= 1.0:
            raise DataError(f"val_density must be in [0, 1], got {self.val_density}")


_CSV_FIELDS = ["epoch", "task_loss", "sparsity", "perceptual_loss", "val_metric", "val_density"]


@dataclass(frozen=True)
class TrainReport:
    """Per-epoch curves plus the identifiers needed to find the checkpoint.

    ``val_metric`` is top-1 accuracy (percent) for selection runs and mean
    PSNR (dB) for preview runs.
    """

    kind: str
    checkpoint_id: str
    records: tuple[EpochRecord, ...]

    @property
    def final_density(self) -> float:
        return self.records[-1].val_density if self.records else 0.0

    @property
    def final_metric(self) -> float:
        return self.records[-1].val_metric if self.records else float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=_CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.records:
            w.writerow(asdict(r))
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"run {self.kind} checkpoint {self.checkpoint_id}",
                 f"epochs: {len(self.records)}"]
        if self.records:
            last = self.records[-1]
            lines += [f"final task loss: {last.task_loss:.6f}",
                      f"final mask density: {last.val_density:.4f}",
                      f"final val metric: {last.val_metric:.4f}"]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "checkpoint_id": self.checkpoint_id,
                           "records": [asdict(r) for r in self.records]}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainReport":
        raw = json.loads(text)
        return cls(raw["kind"], raw["checkpoint_id"],
                   tuple(EpochRecord(**r) for r in raw["records"]))

    def write(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{self.kind}-{self.checkpoint_id}.csv").write_text(self.to_csv())
        (d / f"{self.kind}-{self.checkpoint_id}.txt").write_text(self.summary())


# --- the three loss pieces, value level ---

def loss_task(logits_loss: float, m: ChannelMask, lam: float) -> float:
    """Task cross-entropy plus the rate pressure on kept-channel density."""
    if lam < 0:
        raise DataError(f"lam must be >= 0, got {lam}")
    return logits_loss + lam * mask_mean(m)


def loss_dist(f_hq: FeatureTensor, f_hat: FeatureTensor) -> float:
    if f_hq.shape != f_hat.shape:
        raise DimensionError(f"shape mismatch: {f_hq.shape} vs {f_hat.shape}")
    diff = f_hq.data - f_hat.data
    return float(np.mean(diff * diff))


def loss_total(lt: float, ldist: float, alpha: float) -> float:
    if alpha < 0:
        raise DataError(f"alpha must be >= 0, got {alpha}")
    return lt + alpha * ldist


def config_hash(cfg: TrainConfig) -> str:
    return hashlib.sha256(cfg.to_json().encode()).hexdigest()[:12]


# --- corpus preparation ---

def _load_corpus(cfg: TrainConfig) -> tuple[list[data.LabeledImage], list[data.LabeledImage]]:
    if cfg.dataset_id == "synth10":
        dcfg = data.DatasetConfig(train_size=cfg.train_size, val_size=cfg.val_size,
                                  seed=cfg.data_seed)
        return data.make_split(dcfg)
    if cfg.dataset_id.startswith("dir:"):
        items = data.load_directory(cfg.dataset_id[4:])
        val = [it for i, it in enumerate(items) if i % 5 == 4]
        train = [it for i, it in enumerate(items) if i % 5 != 4]
        return train, val
    raise DataError(f"unknown dataset_id {cfg.dataset_id!r}")


def backbone_for(cfg: TrainConfig) -> SplitBackbone:
    bcfg = BackboneConfig(model_id=cfg.backbone_id, weights_path=cfg.backbone_weights)
    return split_at(bcfg)


def _precompute_features(backbone: SplitBackbone, items: list[data.LabeledImage],
                         cfg: TrainConfig) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(F_HQ, F_LQ, labels) tensors; texture goes through the real codec."""
    fhq, flq, labels = [], [], []
    for it in items:
        fhq.append(backbone.extract_hq(it.image).data)
        dec = texture_roundtrip(it.image, cfg.texture_scale, cfg.texture_quality)
        flq.append(backbone.extract_lq(dec, cfg.texture_scale).data)
        labels.append(it.label)
    return (torch.from_numpy(np.stack(fhq).astype(np.float32)),
            torch.from_numpy(np.stack(flq).astype(np.float32)),
            torch.tensor(labels, dtype=torch.long))


def _fixed_masks(n: int, channels: int, density: float, tag: int) -> torch.Tensor:
    """Per-image random masks with exactly round(density*C) kept channels."""
    k = int(round(density * channels))
    rows = np.zeros((n, channels), dtype=np.float32)
    for i in range(n):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((777, tag, i))))
        rows[i, rng.permutation(channels)[:k]] = 1.0
    return torch.from_numpy(rows)


def _guard_frozen(backbone: SplitBackbone) -> str:
    if any(p.requires_grad for p in backbone.layers.parameters()):
        raise FrozenWeightsError("backbone parameters are trainable; freeze them first")
    return param_checksum(backbone.layers)


# --- backbone pretraining (produces the frozen weights the loops consume) ---

def pretrain_backbone(bcfg: BackboneConfig, dcfg: data.DatasetConfig, out_path: str | Path,
                      epochs: int = 12, lr: float = 1e-3, batch: int = 32,
                      seed: int = 0) -> tuple[Path, float]:
    """Train the full classifier on the corpus and save its weights.

    Returns the weights path and final validation accuracy (percent).  Cached:
    if ``out_path`` exists it is reused untouched.
    """
    out_path = Path(out_path)
    train, val = data.make_split(dcfg)
    if out_path.exists():
        net = split_at(replace(bcfg, weights_path=str(out_path)))
        return out_path, _classifier_accuracy(net, val, batch)
    old_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        torch.manual_seed(seed)
        layers = build_layers(bcfg)
        imgs, labels = data.to_batch(train)
        mean = torch.tensor(bcfg.normalize_mean).view(1, 3, 1, 1)
        std = torch.tensor(bcfg.normalize_std).view(1, 3, 1, 1)
        opt = torch.optim.Adam(layers.parameters(), lr=lr)
        gen = torch.Generator().manual_seed(seed + 1)
        for _ in range(epochs):
            perm = torch.randperm(len(train), generator=gen)
            for start in range(0, len(train), batch):
                idx = perm[start:start + batch]
                x = (imgs[idx] - mean) / std
                loss = F.cross_entropy(layers(x), labels[idx])
                opt.zero_grad()
                loss.backward()
                opt.step()
        out_path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(layers.state_dict(), out_path)
    finally:
        torch.set_num_threads(old_threads)
    net = split_at(replace(bcfg, weights_path=str(out_path)))
    return out_path, _classifier_accuracy(net, val, batch)


def _classifier_accuracy(backbone: SplitBackbone, items: list[data.LabeledImage],
                         batch: int = 64) -> float:
    imgs, labels = data.to_batch(items)
    hits = 0
    with torch.no_grad():
        for start in range(0, len(items), batch):
            logits = backbone.full_batch(imgs[start:start + batch])
            hits += int((logits.argmax(1) == labels[start:start + batch]).sum())
    return 100.0 * hits / len(items)


# --- selection/restoration training ---

@dataclass
class FcnnArtifacts:
    config: TrainConfig
    report: TrainReport
    scorer: ChannelScorer | None
    frm: Frm | None
    backbone: SplitBackbone


def _fcnn_validate(backbone: SplitBackbone, scorer: ChannelScorer | None, frm: Frm | None,
                   cfg: TrainConfig, fhq: torch.Tensor, flq: torch.Tensor,
                   labels: torch.Tensor, masks_fixed: torch.Tensor | None,
                   batch: int) -> tuple[float, float]:
    """Deterministic eval: argmax selection (or the fixed masks), top-1 percent."""
    hits, density_sum = 0, 0.0
    if scorer is not None:
        scorer.eval()
    if frm is not None:
        frm.eval()
    with torch.no_grad():
        for start in range(0, len(labels), batch):
            hq = fhq[start:start + batch]
            lq = flq[start:start + batch] if cfg.texture_on else torch.zeros_like(hq)
            if masks_fixed is not None:
                masks = masks_fixed[start:start + batch]
            else:
                pairs = scorer.paired(scorer(hq))
                masks = (pairs[..., 0] >= pairs[..., 1]).float()
            if frm is not None:
                fhat = frm(hq * masks[:, :, None, None], lq, masks)
            else:
                keep = masks[:, :, None, None]
                fhat = keep * hq + (1.0 - keep) * lq
            logits = backbone.tail_batch(fhat)
            hits += int((logits.argmax(1) == labels[start:start + batch]).sum())
            density_sum += float(masks.sum())
    if scorer is not None:
        scorer.train()
    if frm is not None:
        frm.train()
    acc = 100.0 * hits / len(labels)
    density = density_sum / (len(labels) * fhq.shape[1])
    return acc, density


def train_fcnn_full(cfg: TrainConfig, cache_dir: str | Path | None = None) -> FcnnArtifacts:
    """Optimize the channel scorer and restoration module; backbone untouched."""
    backbone = backbone_for(cfg)
    cid = config_hash(cfg)
    if cache_dir is not None:
        cached = _load_checkpoint(Path(cache_dir) / f"fcnn-{cid}.pt", cfg, backbone)
        if cached is not None:
            return cached
    old_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        artifacts = _train_fcnn_inner(cfg, backbone, cid)
    finally:
        torch.set_num_threads(old_threads)
    if cache_dir is not None:
        _save_checkpoint(Path(cache_dir) / f"fcnn-{cid}.pt", artifacts)
    return artifacts


def _train_fcnn_inner(cfg: TrainConfig, backbone: SplitBackbone, cid: str) -> FcnnArtifacts:
    checksum_before = _guard_frozen(backbone)
    train_items, val_items = _load_corpus(cfg)
    fhq, flq, labels = _precompute_features(backbone, train_items, cfg)
    vhq, vlq, vlabels = _precompute_features(backbone, val_items, cfg)
    channels = fhq.shape[1]

    torch.manual_seed(cfg.seed)
    learned_selection = cfg.fixed_density is None
    scorer = ChannelScorer(channels) if learned_selection else None
    frm = Frm(channels, cfg.modulate) if cfg.frm_on else None
    params = list(scorer.parameters()) if scorer is not None else []
    if frm is not None:
        params += list(frm.parameters())
    opt = torch.optim.Adam(params, lr=cfg.lr) if params else None

    masks_train = masks_val = None
    if not learned_selection:
        masks_train = _fixed_masks(len(train_items), channels, cfg.fixed_density, 0)
        masks_val = _fixed_masks(len(val_items), channels, cfg.fixed_density, 1)

    shuffle_gen = torch.Generator().manual_seed(cfg.seed + 1)
    gumbel_gen = torch.Generator().manual_seed(cfg.seed + 2)
    gcfg = GumbelConfig(tau=cfg.tau, hard=True)
    records: list[EpochRecord] = []
    for epoch in range(cfg.epochs):
        perm = torch.randperm(len(train_items), generator=shuffle_gen)
        task_sum = dist_sum = density_sum = 0.0
        nb = 0
        for start in range(0, len(train_items), cfg.batch):
            idx = perm[start:start + cfg.batch]
            hq = fhq[idx]
            lq = flq[idx] if cfg.texture_on else torch.zeros_like(hq)
            if learned_selection:
                pairs = scorer.paired(scorer(hq))
                masks = gumbel_sample(pairs, gcfg, gumbel_gen)[..., 0]
            else:
                masks = masks_train[idx]
            if frm is not None:
                fhat = frm(hq * masks[:, :, None, None], lq, masks)
            else:
                keep = masks[:, :, None, None]
                fhat = keep * hq + (1.0 - keep) * lq
            ce = F.cross_entropy(backbone.tail_batch(fhat), labels[idx])
            dist = F.mse_loss(fhat, hq)
            loss = ce + cfg.alpha * dist
            if learned_selection:
                # straight-through mean: hard density forward, soft gradient back
                loss = loss + cfg.lam * masks.mean()
            if opt is not None:
                opt.zero_grad()
                loss.backward()
                opt.step()
            task_sum += float(ce.detach())
            dist_sum += float(dist.detach())
            density_sum += float(masks.detach().mean())
            nb += 1
        val_acc, val_density = _fcnn_validate(
            backbone, scorer, frm, cfg, vhq, vlq, vlabels, masks_val, cfg.batch)
        records.append(EpochRecord(epoch, task_sum / nb, density_sum / nb,
                                   dist_sum / nb, val_acc, val_density))
    if param_checksum(backbone.layers) != checksum_before:
        raise FrozenWeightsError("backbone weights changed during selection training")
    report = TrainReport("fcnn", cid, tuple(records))
    return FcnnArtifacts(cfg, report, scorer, frm, backbone)


def train_fcnn(cfg: TrainConfig, cache_dir: str | Path | None = None) -> TrainReport:
    return train_fcnn_full(cfg, cache_dir).report


# --- preview-network training ---

@dataclass
class IrnnArtifacts:
    config: TrainConfig
    report: TrainReport
    net: Irnn
    backbone: SplitBackbone


def irnn_features(backbone: SplitBackbone, items: list[data.LabeledImage],
                   cfg: TrainConfig, fcnn: FcnnArtifacts | None) -> torch.Tensor:
    """Decoder-side features the preview net will see (identity feature codec)."""
    feats = []
    for it in items:
        hq = backbone.extract_hq(it.image)
        if fcnn is None or (fcnn.scorer is None and fcnn.frm is None):
            feats.append(hq.data)
            continue
        dec = texture_roundtrip(it.image, cfg.texture_scale, cfg.texture_quality)
        lq = backbone.extract_lq(dec, cfg.texture_scale)
        if fcnn.scorer is not None:
            mask, _ = select_channels_argmax(hq, fcnn.scorer)
        else:
            mask = ChannelMask(np.ones(hq.channels, dtype=np.uint8))
        f_m = apply_mask(hq, mask)
        if fcnn.frm is not None:
            fhat = reconstruct(fcnn.frm, f_m, lq, mask)
        else:
            fhat = fill_missing(f_m, lq, mask)
        feats.append(fhat.data)
    return torch.from_numpy(np.stack(feats).astype(np.float32))


def train_irnn_full(cfg: TrainConfig, fcnn: FcnnArtifacts | None = None,
                    cache_dir: str | Path | None = None) -> IrnnArtifacts:
    """Optimize the preview network against pixel MSE; backbone untouched."""
    backbone = fcnn.backbone if fcnn is not None else backbone_for(cfg)
    cid = config_hash(cfg)
    old_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        artifacts = _train_irnn_inner(cfg, backbone, fcnn, cid)
    finally:
        torch.set_num_threads(old_threads)
    if cache_dir is not None:
        d = Path(cache_dir)
        d.mkdir(parents=True, exist_ok=True)
        torch.save({"config": cfg.to_json(), "net": artifacts.net.state_dict(),
                    "report": artifacts.report.to_json()}, d / f"irnn-{cid}.pt")
    return artifacts


def _train_irnn_inner(cfg: TrainConfig, backbone: SplitBackbone,
                      fcnn: FcnnArtifacts | None, cid: str) -> IrnnArtifacts:
    checksum_before = _guard_frozen(backbone)
    train_items, val_items = _load_corpus(cfg)

    def prep(items: list[data.LabeledImage]) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        lrs = [texture_roundtrip(it.image, cfg.texture_scale, cfg.texture_quality).pixels
               for it in items]
        targets = [it.image.pixels for it in items]
        feats = irnn_features(backbone, items, cfg, fcnn)
        if cfg.features_off:
            feats = torch.zeros_like(feats)
        return (torch.from_numpy(np.stack(lrs).astype(np.float32)),
                torch.from_numpy(np.stack(targets).astype(np.float32)), feats)

    lr_t, tgt_t, ft_t = prep(train_items)
    lr_v, tgt_v, ft_v = prep(val_items)
    level = inject_level_for(lr_t.shape[-1], ft_t.shape[-1])
    icfg = IrnnConfig(depth=cfg.irnn_depth, base_width=cfg.irnn_width,
                      upscale=cfg.texture_scale, feature_channels=ft_t.shape[1],
                      feature_inject_level=level)

    torch.manual_seed(cfg.seed)
    net = Irnn(icfg)
    net.zero_residual_()
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    gen = torch.Generator().manual_seed(cfg.seed + 1)

    def validate() -> tuple[float, float]:
        net.eval()
        mses = []
        with torch.no_grad():
            for start in range(0, len(val_items), cfg.batch):
                out = net(lr_v[start:start + cfg.batch], ft_v[start:start + cfg.batch],
                          clamp=True)
                diff = (out - tgt_v[start:start + cfg.batch]) * 255.0
                mses.extend((diff ** 2).mean(dim=(1, 2, 3)).tolist())
        net.train()
        mean_psnr = float(np.mean([10.0 * np.log10(255.0 ** 2 / m) if m > 0 else 99.0
                                   for m in mses]))
        return float(np.mean(mses)) / 255.0 ** 2, mean_psnr

    records: list[EpochRecord] = []
    for epoch in range(cfg.epochs):
        perm = torch.randperm(len(train_items), generator=gen)
        loss_sum, nb = 0.0, 0
        for start in range(0, len(train_items), cfg.batch):
            idx = perm[start:start + cfg.batch]
            out = net(lr_t[idx], ft_t[idx], clamp=False)
            loss = F.mse_loss(out, tgt_t[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
            loss_sum += float(loss.detach())
            nb += 1
        val_mse, val_psnr = validate()
        records.append(EpochRecord(epoch, loss_sum / nb, 0.0, val_mse, val_psnr, 0.0))
    if param_checksum(backbone.layers) != checksum_before:
        raise FrozenWeightsError("backbone weights changed during preview training")
    report = TrainReport("irnn", cid, tuple(records))
    return IrnnArtifacts(cfg, report, net, backbone)


def train_irnn(cfg: TrainConfig, fcnn: FcnnArtifacts | None = None,
               cache_dir: str | Path | None = None) -> TrainReport:
    return train_irnn_full(cfg, fcnn, cache_dir).report


# --- checkpoint IO ---

def _save_checkpoint(path: Path, art: FcnnArtifacts) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "config": art.config.to_json(),
        "scorer": art.scorer.state_dict() if art.scorer is not None else None,
        "frm": art.frm.state_dict() if art.frm is not None else None,
        "report": art.report.to_json(),
    }, path)


def _load_checkpoint(path: Path, cfg: TrainConfig,
                     backbone: SplitBackbone) -> FcnnArtifacts | None:
    if not path.exists():
        return None
    blob = torch.load(path, map_location="cpu", weights_only=False)
    saved = TrainConfig.from_json(blob["config"])
    if saved != cfg:
        return None
    channels = backbone.feature_channels
    scorer = frm = None
    if blob["scorer"] is not None:
        scorer = ChannelScorer(channels)
        scorer.load_state_dict(blob["scorer"])
    if blob["frm"] is not None:
        frm = Frm(channels, cfg.modulate)
        frm.load_state_dict(blob["frm"])
    return FcnnArtifacts(cfg, TrainReport.from_json(blob["report"]), scorer, frm, backbone)


def load_fcnn(path: str | Path, backbone: SplitBackbone) -> FcnnArtifacts:
    blob = torch.load(Path(path), map_location="cpu", weights_only=False)
    cfg = TrainConfig.from_json(blob["config"])
    art = _load_checkpoint(Path(path), cfg, backbone)
    if art is None:
        raise DataError(f"checkpoint {path} could not be loaded")
    return art


def load_irnn(path: str | Path, backbone: SplitBackbone) -> IrnnArtifacts:
    blob = torch.load(Path(path), map_location="cpu", weights_only=False)
    cfg = TrainConfig.from_json(blob["config"])
    channels = backbone.feature_channels
    lr_size = backbone.config.input_size // cfg.texture_scale
    feat_size = backbone.feature_shape()[-1]
    level = inject_level_for(lr_size, feat_size)
    net = Irnn(IrnnConfig(depth=cfg.irnn_depth, base_width=cfg.irnn_width,
                          upscale=cfg.texture_scale, feature_channels=channels,
                          feature_inject_level=level))
    net.load_state_dict(blob["net"])
    return IrnnArtifacts(cfg, TrainReport.from_json(blob["report"]), net, backbone)


# --- experiment runners ---

@dataclass(frozen=True)
class SweepRow:
    lam: float
    seed: int
    final_density: float
    final_accuracy: float


def run_lambda_sweep(base: TrainConfig, lams: list[float], seeds: list[int],
                     cache_dir: str | Path | None = None) -> list[SweepRow]:
    rows = []
    for lam in lams:
        for seed in seeds:
            cfg = replace(base, lam=lam, seed=seed)
            rep = train_fcnn(cfg, cache_dir)
            rows.append(SweepRow(lam, seed, rep.final_density, rep.final_metric))
    return rows


def mean_density_by_lambda(rows: list[SweepRow]) -> dict[float, float]:
    out: dict[float, list[float]] = {}
    for r in rows:
        out.setdefault(r.lam, []).append(r.final_density)
    return {lam: float(np.mean(v)) for lam, v in sorted(out.items())}


@dataclass(frozen=True)
class AblationRow:
    method: int
    texture_on: bool
    frm_on: bool
    seed: int
    accuracy: float
    density: float


def run_ablation(base: TrainConfig, seeds: list[int],
                 cache_dir: str | Path | None = None) -> list[AblationRow]:
    """All four texture/FRM arms at matched mask density (requires fixed_density)."""
    if base.fixed_density is None:
        raise DataError("ablation comparison needs fixed_density for matched masks")
    rows = []
    for texture_on, frm_on in [(False, False), (True, False), (False, True), (True, True)]:
        ab = ablation_variant(texture_on, frm_on)
        for seed in seeds:
            cfg = replace(with_ablation(base, ab), seed=seed)
            rep = train_fcnn(cfg, cache_dir)
            rows.append(AblationRow(ab.method_number, texture_on, frm_on, seed,
                                    rep.final_metric, rep.final_density))
    return rows


def mean_accuracy_by_method(rows: list[AblationRow]) -> dict[int, float]:
    out: dict[int, list[float]] = {}
    for r in rows:
        out.setdefault(r.method, []).append(r.accuracy)
    return {m: float(np.mean(v)) for m, v in sorted(out.items())}
