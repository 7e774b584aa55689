"""Command-line front end: encode/decode, training, sweeps, BD, reports.

All experiment state flows through JSON configs plus path/seed flags, so any
result can be regenerated from its command line.  Subcommands print compact
human-readable summaries; bulk outputs land in CSV files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import data
from .backbone import BackboneConfig, SplitBackbone, split_at
from .bd import bd_metric
from .codec import BackendError, DeflateBackend, RequantBackend, default_registry
from .datamodel import ConfigurationError
from .evaluate import (
    SweepConfig,
    points_for_arm,
    read_rate_csv,
    run_psnr_eval,
    run_rate_accuracy,
)
from .pipeline import PipelineConfig, decode_image, encode_image
from .report import (
    reference_rate_table,
    render_ablation_table,
    render_bd_summary,
    render_psnr_table,
)
from .training import (
    FrozenWeightsError,
    TrainConfig,
    load_fcnn,
    load_irnn,
    mean_accuracy_by_method,
    pretrain_backbone,
    run_ablation,
    train_fcnn_full,
    train_irnn_full,
)
from .upscaler import psnr

__all__ = ["main"]


def _backbone(args: argparse.Namespace) -> SplitBackbone:
    weights = getattr(args, "backbone_weights", None)
    if weights is not None and not Path(weights).exists():
        raise ConfigurationError(f"backbone weights not found: {weights}")
    return split_at(BackboneConfig(model_id=args.backbone, weights_path=weights))


def _train_config(args: argparse.Namespace) -> TrainConfig:
    if getattr(args, "config", None):
        cfg = TrainConfig.from_json(Path(args.config).read_text())
    else:
        cfg = TrainConfig()
    overrides = {}
    for field in ("lam", "alpha", "lr", "epochs", "batch", "seed", "tau",
                  "texture_quality", "texture_scale", "train_size", "val_size",
                  "fixed_density", "irnn_depth", "irnn_width"):
        val = getattr(args, field, None)
        if val is not None:
            overrides[field] = val
    if getattr(args, "backbone_weights", None):
        overrides["backbone_weights"] = args.backbone_weights
    if getattr(args, "no_texture", False):
        overrides["texture_on"] = False
    if getattr(args, "no_frm", False):
        overrides["frm_on"] = False
    if getattr(args, "features_off", False):
        overrides["features_off"] = True
    return replace(cfg, **overrides)


def _feature_backend(args: argparse.Namespace):
    if args.feature_backend == "deflate":
        return DeflateBackend()
    return RequantBackend(step=args.feature_step)


def _load_fcnn_checkpoint(args: argparse.Namespace, backbone: SplitBackbone):
    path = getattr(args, "fcnn_checkpoint", None)
    if path is None or not Path(path).exists():
        raise ConfigurationError(f"selection checkpoint not found: {path}")
    return load_fcnn(path, backbone)


def _cmd_pretrain(args: argparse.Namespace) -> int:
    bcfg = BackboneConfig(model_id=args.backbone)
    dcfg = data.DatasetConfig(train_size=args.train_size, val_size=args.val_size,
                              seed=args.data_seed)
    path, acc = pretrain_backbone(bcfg, dcfg, args.out, epochs=args.epochs,
                                  seed=args.seed)
    print(f"weights: {path}")
    print(f"clean val accuracy: {acc:.2f}%")
    return 0


def _cmd_train_fcnn(args: argparse.Namespace) -> int:
    cfg = _train_config(args)
    art = train_fcnn_full(cfg, cache_dir=args.cache_dir)
    if args.out_dir:
        art.report.write(args.out_dir)
        if args.cache_dir is None:
            print("warning: no --cache-dir, checkpoint not persisted", file=sys.stderr)
    print(art.report.summary(), end="")
    if args.cache_dir:
        print(f"checkpoint: {Path(args.cache_dir) / ('fcnn-' + art.report.checkpoint_id + '.pt')}")
    return 0


def _cmd_train_irnn(args: argparse.Namespace) -> int:
    cfg = _train_config(args)
    fcnn = None
    if getattr(args, "fcnn_checkpoint", None):
        fcnn = load_fcnn(args.fcnn_checkpoint, _backbone(args))
    art = train_irnn_full(cfg, fcnn=fcnn, cache_dir=args.cache_dir)
    if args.out_dir:
        art.report.write(args.out_dir)
    print(art.report.summary(), end="")
    if args.cache_dir:
        print(f"checkpoint: {Path(args.cache_dir) / ('irnn-' + art.report.checkpoint_id + '.pt')}")
    return 0


def _cmd_encode(args: argparse.Namespace) -> int:
    backbone = _backbone(args)
    fcnn = _load_fcnn_checkpoint(args, backbone)
    img = data.load_image(args.image, size=backbone.config.input_size)
    pcfg = PipelineConfig(texture_scale=args.texture_scale,
                          texture_quality=args.texture_quality)
    enc = encode_image(img, backbone, fcnn.scorer, _feature_backend(args), pcfg)
    Path(args.out_features).write_bytes(enc.feature_stream)
    Path(args.out_texture).write_bytes(enc.texture_stream)
    r = enc.rate
    print(f"kept channels: {enc.mask.kept_count}/{enc.mask.length}")
    print(f"feature payload: {r.feature_payload_bits} bits ({r.feature_bpp:.4f} bpp)")
    print(f"side info:       {r.feature_side_info_bits} bits ({r.side_info_bpp:.4f} bpp)")
    print(f"texture:         {r.texture_bits} bits ({r.texture_bpp:.4f} bpp)")
    print(f"total:           {r.total_bits} bits ({r.total_bpp:.4f} bpp)")
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    backbone = _backbone(args)
    fcnn = _load_fcnn_checkpoint(args, backbone)
    pcfg = PipelineConfig(texture_scale=args.texture_scale,
                          texture_quality=args.texture_quality)
    irnn = None
    if args.irnn_checkpoint:
        irnn = load_irnn(args.irnn_checkpoint, backbone).net
    dec = decode_image(Path(args.features).read_bytes(), Path(args.texture).read_bytes(),
                       backbone, fcnn.frm, pcfg, default_registry(), irnn=irnn)
    print(f"predicted class: {dec.task.predicted_class}")
    top = np.argsort(dec.task.logits)[::-1][:3]
    print("top-3 logits: " + ", ".join(f"{i}:{dec.task.logits[i]:.3f}" for i in top))
    if dec.preview is not None and args.out_preview:
        data.save_image(dec.preview, args.out_preview)
        print(f"preview written: {args.out_preview}")
    if args.reference:
        ref = data.load_image(args.reference, size=backbone.config.input_size)
        shown = dec.preview if dec.preview is not None \
            else data.upscale(dec.texture, args.texture_scale)
        print(f"preview PSNR: {psnr(ref, shown):.3f} dB")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = SweepConfig(arms=tuple(args.arms), lams=tuple(args.lams),
                      feature_steps=tuple(args.feature_steps),
                      image_steps=tuple(args.image_steps),
                      max_images=args.max_images, out_dir=args.out_dir)
    base = _train_config(args)
    rows = run_rate_accuracy(cfg, base, cache_dir=args.cache_dir)
    for r in rows:
        print(f"{r.arm:<16} {r.setting:<12} bpp={r.bpp:8.4f} acc={r.accuracy:6.2f}%")
    if args.out_dir:
        print(f"wrote {Path(args.out_dir) / 'rate_points.csv'}")
    return 0


def _cmd_psnr_eval(args: argparse.Namespace) -> int:
    base = _train_config(args)
    fcnn = None
    if getattr(args, "fcnn_checkpoint", None):
        fcnn = load_fcnn(args.fcnn_checkpoint, _backbone(args))
    _, means = run_psnr_eval(base, fcnn=fcnn, cache_dir=args.cache_dir,
                             max_images=args.max_images, out_dir=args.out_dir)
    print(render_psnr_table(means), end="")
    delta = means["texture-feature-sr"] - means["texture-sr"]
    print(f"feature gain over texture-only: {delta:+.3f} dB")
    return 0


def _cmd_ablation(args: argparse.Namespace) -> int:
    base = _train_config(args)
    if base.fixed_density is None:
        base = replace(base, fixed_density=0.25)
    rows = run_ablation(base, seeds=args.seeds, cache_dir=args.cache_dir)
    means = mean_accuracy_by_method(rows)
    print(render_ablation_table(means, base.fixed_density), end="")
    return 0


def _cmd_bd(args: argparse.Namespace) -> int:
    rows = read_rate_csv(args.csv)
    a = points_for_arm(rows, args.arm_a)
    b = points_for_arm(rows, args.arm_b)
    val = bd_metric(a, b, args.mode)
    label = "BD-rate" if args.mode == "rate" else "BD-quality"
    print(f"{label} {args.arm_b} vs {args.arm_a}: {val:+.4f}"
          + ("%" if args.mode == "rate" else ""))
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    if args.reference:
        print(reference_rate_table(), end="")
        print(render_psnr_table({}, reference=True), end="")
        print(render_bd_summary(reference=True), end="")
        return 0
    if args.rate_csv:
        rows = read_rate_csv(args.rate_csv)
        from .report import rate_table_from_sweep, render_rate_table
        table, notes = rate_table_from_sweep(rows, args.targets,
                                             raw_feature_bytes=args.raw_feature_bytes,
                                             img_pixels=args.img_pixels)
        print(render_rate_table(table, notes), end="")
    if args.ablation_json:
        means = {int(k): v for k, v in json.loads(Path(args.ablation_json).read_text()).items()}
        print(render_ablation_table(means, args.density), end="")
    return 0


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON training config; flags override fields")
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--texture-quality", type=int, default=None, dest="texture_quality")
    p.add_argument("--texture-scale", type=int, default=None, dest="texture_scale")
    p.add_argument("--train-size", type=int, default=None, dest="train_size")
    p.add_argument("--val-size", type=int, default=None, dest="val_size")
    p.add_argument("--fixed-density", type=float, default=None, dest="fixed_density")
    p.add_argument("--irnn-depth", type=int, default=None, dest="irnn_depth")
    p.add_argument("--irnn-width", type=int, default=None, dest="irnn_width")
    p.add_argument("--backbone", default="tinyvgg10")
    p.add_argument("--backbone-weights", default=None, dest="backbone_weights")
    p.add_argument("--cache-dir", default=None, dest="cache_dir")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tgfc",
                                 description="texture-guided feature compression")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain-backbone", help="train and save the frozen classifier")
    p.add_argument("--out", required=True)
    p.add_argument("--backbone", default="tinyvgg10")
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--train-size", type=int, default=512, dest="train_size")
    p.add_argument("--val-size", type=int, default=128, dest="val_size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data-seed", type=int, default=0, dest="data_seed")
    p.set_defaults(func=_cmd_pretrain)

    p = sub.add_parser("train-fcnn", help="train channel selection + restoration")
    _add_train_flags(p)
    p.add_argument("--no-texture", action="store_true", dest="no_texture")
    p.add_argument("--no-frm", action="store_true", dest="no_frm")
    p.add_argument("--out-dir", default=None, dest="out_dir")
    p.set_defaults(func=_cmd_train_fcnn)

    p = sub.add_parser("train-irnn", help="train the preview reconstruction net")
    _add_train_flags(p)
    p.add_argument("--features-off", action="store_true", dest="features_off",
                   help="texture-only variant (feature input zeroed)")
    p.add_argument("--fcnn-checkpoint", default=None, dest="fcnn_checkpoint")
    p.add_argument("--out-dir", default=None, dest="out_dir")
    p.set_defaults(func=_cmd_train_irnn)

    p = sub.add_parser("encode", help="encode one image into the two streams")
    p.add_argument("--image", required=True)
    p.add_argument("--backbone", default="tinyvgg10")
    p.add_argument("--backbone-weights", required=True, dest="backbone_weights")
    p.add_argument("--fcnn-checkpoint", required=True, dest="fcnn_checkpoint")
    p.add_argument("--out-features", required=True, dest="out_features")
    p.add_argument("--out-texture", required=True, dest="out_texture")
    p.add_argument("--texture-scale", type=int, default=2, dest="texture_scale")
    p.add_argument("--texture-quality", type=int, default=24, dest="texture_quality")
    p.add_argument("--feature-backend", choices=["deflate", "requant"],
                   default="deflate", dest="feature_backend")
    p.add_argument("--feature-step", type=int, default=8, dest="feature_step")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="decode streams to a class and a preview")
    p.add_argument("--features", required=True)
    p.add_argument("--texture", required=True)
    p.add_argument("--backbone", default="tinyvgg10")
    p.add_argument("--backbone-weights", required=True, dest="backbone_weights")
    p.add_argument("--fcnn-checkpoint", required=True, dest="fcnn_checkpoint")
    p.add_argument("--irnn-checkpoint", default=None, dest="irnn_checkpoint")
    p.add_argument("--out-preview", default=None, dest="out_preview")
    p.add_argument("--reference", default=None, help="original image for PSNR")
    p.add_argument("--texture-scale", type=int, default=2, dest="texture_scale")
    p.add_argument("--texture-quality", type=int, default=24, dest="texture_quality")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("sweep", help="rate-accuracy sweep over the chosen arms")
    _add_train_flags(p)
    p.add_argument("--arms", nargs="+",
                   default=["proposed", "feature-anchor", "image-anchor"])
    p.add_argument("--lams", nargs="+", type=float, default=[0.1, 1.0, 3.0, 10.0])
    p.add_argument("--feature-steps", nargs="+", type=int,
                   default=[4, 16, 64, 128], dest="feature_steps")
    p.add_argument("--image-steps", nargs="+", type=int,
                   default=[4, 16, 64, 128], dest="image_steps")
    p.add_argument("--max-images", type=int, default=64, dest="max_images")
    p.add_argument("--out-dir", default=None, dest="out_dir")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("psnr-eval", help="bicubic vs preview-net quality comparison")
    _add_train_flags(p)
    p.add_argument("--fcnn-checkpoint", default=None, dest="fcnn_checkpoint")
    p.add_argument("--max-images", type=int, default=64, dest="max_images")
    p.add_argument("--out-dir", default=None, dest="out_dir")
    p.set_defaults(func=_cmd_psnr_eval)

    p = sub.add_parser("ablation", help="texture/FRM ablation at matched density")
    _add_train_flags(p)
    p.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2])
    p.set_defaults(func=_cmd_ablation)

    p = sub.add_parser("bd", help="Bjontegaard delta between two sweep arms")
    p.add_argument("--csv", required=True)
    p.add_argument("--arm-a", required=True, dest="arm_a")
    p.add_argument("--arm-b", required=True, dest="arm_b")
    p.add_argument("--mode", choices=["rate", "quality"], default="rate")
    p.set_defaults(func=_cmd_bd)

    p = sub.add_parser("report", help="render result tables")
    p.add_argument("--reference", action="store_true",
                   help="print the pinned full-scale reference tables")
    p.add_argument("--rate-csv", default=None, dest="rate_csv")
    p.add_argument("--targets", nargs="+", type=float, default=[62.0, 65.0])
    p.add_argument("--raw-feature-bytes", type=int, default=2048,
                   dest="raw_feature_bytes")
    p.add_argument("--img-pixels", type=int, default=1024, dest="img_pixels")
    p.add_argument("--ablation-json", default=None, dest="ablation_json")
    p.add_argument("--density", type=float, default=0.25)
    p.set_defaults(func=_cmd_report)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, BackendError, FrozenWeightsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
