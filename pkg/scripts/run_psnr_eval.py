"""Preview-quality comparison: bicubic vs texture-only vs texture+feature nets.

Trains the two preview networks (feature input zeroed for the texture-only
arm), then scores every validation image against the original.  Per-image
numbers go to psnr.csv; the mean table and the feature delta are printed.
"""

import argparse

from tgfc.backbone import BackboneConfig
from tgfc.data import DatasetConfig
from tgfc.evaluate import run_psnr_eval
from tgfc.report import render_psnr_table
from tgfc.training import TrainConfig, pretrain_backbone


def ensure_weights(path: str) -> str:
    out, acc = pretrain_backbone(BackboneConfig(), DatasetConfig(), path)
    print(f"backbone ready at {out} (clean val acc {acc:.2f}%)")
    return str(out)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--weights", default="runs/backbone.pt")
    ap.add_argument("--epochs", type=int, default=150)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--train-size", type=int, default=64)
    ap.add_argument("--val-size", type=int, default=32)
    ap.add_argument("--max-images", type=int, default=32)
    ap.add_argument("--cache-dir", default="runs/cache")
    ap.add_argument("--out-dir", default="runs/psnr")
    args = ap.parse_args()

    base = TrainConfig(epochs=args.epochs, lr=args.lr, train_size=args.train_size,
                       val_size=args.val_size,
                       backbone_weights=ensure_weights(args.weights))
    _, means = run_psnr_eval(base, fcnn=None, cache_dir=args.cache_dir,
                             max_images=args.max_images, out_dir=args.out_dir)
    print(render_psnr_table(means), end="")
    delta = means["texture-feature-sr"] - means["texture-sr"]
    print(f"feature gain over texture-only: {delta:+.3f} dB")
    print(f"wrote {args.out_dir}/psnr.csv")


if __name__ == "__main__":
    main()
