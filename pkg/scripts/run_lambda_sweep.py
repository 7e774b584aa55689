"""Sweep the selection-rate weight and tabulate final mask density per value.

Higher lambda prices kept channels more heavily, so mean final density should
fall (or hold) as lambda grows.  Results land in a CSV next to the printout.
"""

import argparse
import csv
from pathlib import Path

from tgfc.backbone import BackboneConfig
from tgfc.data import DatasetConfig
from tgfc.training import (
    TrainConfig,
    mean_density_by_lambda,
    pretrain_backbone,
    run_lambda_sweep,
)


def ensure_weights(path: str) -> str:
    out, acc = pretrain_backbone(BackboneConfig(), DatasetConfig(), path)
    print(f"backbone ready at {out} (clean val acc {acc:.2f}%)")
    return str(out)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--weights", default="runs/backbone.pt")
    ap.add_argument("--lams", nargs="+", type=float, default=[0.1, 3.0, 10.0])
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2])
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--lr", type=float, default=1e-4)
    ap.add_argument("--train-size", type=int, default=128)
    ap.add_argument("--val-size", type=int, default=64)
    ap.add_argument("--cache-dir", default="runs/cache")
    ap.add_argument("--out", default="runs/lambda_sweep.csv")
    args = ap.parse_args()

    base = TrainConfig(epochs=args.epochs, lr=args.lr, train_size=args.train_size,
                       val_size=args.val_size,
                       backbone_weights=ensure_weights(args.weights))
    rows = run_lambda_sweep(base, args.lams, args.seeds, args.cache_dir)

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lam", "seed", "final_density", "final_accuracy"])
        for r in rows:
            w.writerow([r.lam, r.seed, f"{r.final_density:.6f}", f"{r.final_accuracy:.4f}"])

    print("lambda | mean final density")
    for lam, density in mean_density_by_lambda(rows).items():
        print(f"{lam:6g} | {density:.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
