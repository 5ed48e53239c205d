"""Accuracy vs. first-hidden-layer width and learning rate on synthetic data.

Writes a sweep CSV (one row per cell and repetition plus mean/std rows) and
prints the mean validation top-1 per cell.

    python scripts/explore_widths.py --n 3000 --classes 20 --out widths.csv
"""
import argparse

from playerprice.dataio import generate_synthetic, make_dataset
from playerprice.netcore import NetworkConfig
from playerprice.optim import Hyperparams
from playerprice.trainer import SweepCell, SweepSpec, sweep, sweep_to_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=3000)
    ap.add_argument("--classes", type=int, default=20)
    ap.add_argument("--widths", default="32,128,512")
    ap.add_argument("--lrs", default="0.1,0.01,0.001")
    ap.add_argument("--max-epochs", type=int, default=200)
    ap.add_argument("--repetitions", type=int, default=2)
    ap.add_argument("--parallel", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="widths.csv")
    args = ap.parse_args()

    ds = make_dataset(generate_synthetic(args.n, args.classes, args.seed), seed=args.seed)
    cells = []
    for width in map(int, args.widths.split(",")):
        for lr in map(float, args.lrs.split(",")):
            cfg = NetworkConfig((41, width, max(width // 2, 8), len(ds.ladder)),
                                init_seed=args.seed)
            hp = Hyperparams(eta0=lr, max_epochs=args.max_epochs, seed=args.seed)
            cells.append(SweepCell(f"w{width}_lr{lr:g}", cfg, hp))
    rows = sweep(SweepSpec(tuple(cells), args.repetitions), ds, parallel=args.parallel)
    with open(args.out, "w", newline="") as fh:
        fh.write(sweep_to_csv(rows))
    for r in rows:
        if r["repetition"] == "mean":
            print(f"{r['cell']:>16s}  top1 {r['top1']:.3f}  top5 {r['top5']:.3f}  "
                  f"ape {r['ape']:.1f}%")


if __name__ == "__main__":
    main()
