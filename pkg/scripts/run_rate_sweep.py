"""Rate-accuracy curves for the selected arms, with a BD summary when possible.

The proposed arm trains one selection model per lambda; anchors reuse the
frozen backbone.  Curves, CSV, and plot land in the output directory.  BD
deltas against the image anchor are printed when both curves qualify (at
least four points, overlapping ranges, monotone quality for rate mode).
"""

import argparse

from tgfc.backbone import BackboneConfig
from tgfc.bd import MetricError, bd_quality, bd_rate
from tgfc.data import DatasetConfig
from tgfc.evaluate import SweepConfig, points_for_arm, run_rate_accuracy
from tgfc.report import render_bd_summary
from tgfc.training import TrainConfig, pretrain_backbone


def ensure_weights(path: str) -> str:
    out, acc = pretrain_backbone(BackboneConfig(), DatasetConfig(), path)
    print(f"backbone ready at {out} (clean val acc {acc:.2f}%)")
    return str(out)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--weights", default="runs/backbone.pt")
    ap.add_argument("--arms", nargs="+",
                    default=["proposed", "feature-anchor", "image-anchor"])
    ap.add_argument("--lams", nargs="+", type=float, default=[0.1, 1.0, 3.0, 10.0])
    ap.add_argument("--feature-steps", nargs="+", type=int, default=[4, 16, 64, 128])
    ap.add_argument("--image-steps", nargs="+", type=int, default=[4, 16, 64, 128])
    ap.add_argument("--max-images", type=int, default=32)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--lr", type=float, default=1e-4)
    ap.add_argument("--train-size", type=int, default=128)
    ap.add_argument("--val-size", type=int, default=64)
    ap.add_argument("--cache-dir", default="runs/cache")
    ap.add_argument("--out-dir", default="runs/rate")
    args = ap.parse_args()

    base = TrainConfig(epochs=args.epochs, lr=args.lr, train_size=args.train_size,
                       val_size=args.val_size,
                       backbone_weights=ensure_weights(args.weights))
    cfg = SweepConfig(arms=tuple(args.arms), lams=tuple(args.lams),
                      feature_steps=tuple(args.feature_steps),
                      image_steps=tuple(args.image_steps),
                      max_images=args.max_images, out_dir=args.out_dir)
    rows = run_rate_accuracy(cfg, base, cache_dir=args.cache_dir)
    for r in rows:
        print(f"{r.arm:<16} {r.setting:<12} bpp={r.bpp:8.4f} acc={r.accuracy:6.2f}%")
    print(f"wrote {args.out_dir}/rate_points.csv and rate_accuracy.png")

    if "image-anchor" in args.arms and "proposed" in args.arms:
        anchor = points_for_arm(rows, "image-anchor")
        proposed = points_for_arm(rows, "proposed")
        try:
            acc_delta = bd_quality(anchor, proposed)
        except MetricError as exc:
            print(f"BD-accuracy unavailable: {exc}")
            acc_delta = None
        try:
            bits_delta = bd_rate(anchor, proposed)
        except MetricError as exc:
            print(f"BD-rate unavailable: {exc}")
            bits_delta = None
        if acc_delta is not None or bits_delta is not None:
            print(render_bd_summary(acc_delta, bits_delta), end="")


if __name__ == "__main__":
    main()
