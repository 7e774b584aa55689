"""Train the frozen classifier backbone once and report its clean accuracy.

Every other experiment loads these weights; rerunning with an existing output
path reuses the file untouched.
"""

import argparse

from tgfc.backbone import BackboneConfig
from tgfc.data import DatasetConfig
from tgfc.training import pretrain_backbone


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/backbone.pt")
    ap.add_argument("--epochs", type=int, default=12)
    ap.add_argument("--train-size", type=int, default=512)
    ap.add_argument("--val-size", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--data-seed", type=int, default=0)
    args = ap.parse_args()

    dcfg = DatasetConfig(train_size=args.train_size, val_size=args.val_size,
                         seed=args.data_seed)
    path, acc = pretrain_backbone(BackboneConfig(), dcfg, args.out,
                                  epochs=args.epochs, seed=args.seed)
    print(f"weights: {path}")
    print(f"clean val accuracy: {acc:.2f}%")


if __name__ == "__main__":
    main()
