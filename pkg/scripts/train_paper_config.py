"""Train the final [41, 2000, 1500, 500, 119] configuration and report test metrics.

Without --data a synthetic 15,340-player table over 119 price rungs stands in for
the FIFA 2017 roster. Expect a long run at full width; --hidden shrinks it.

    python scripts/train_paper_config.py --data fifa17.csv --log epochs.csv
"""
import argparse
import logging

from playerprice.dataio import generate_synthetic, make_dataset, read_player_csv
from playerprice.netcore import NetworkConfig
from playerprice.optim import Hyperparams
from playerprice.persist import ModelBundle, save_model_file
from playerprice.trainer import evaluate, fit


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data")
    ap.add_argument("--hidden", default="2000,1500,500")
    ap.add_argument("--max-epochs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--log")
    ap.add_argument("--model")
    args = ap.parse_args()
    logging.basicConfig(level=logging.DEBUG, format="%(message)s")

    table = read_player_csv(args.data) if args.data else generate_synthetic(15_340, 119, args.seed)
    ds = make_dataset(table, seed=args.seed)
    print(f"{len(ds.split.train)} train / {len(ds.split.val)} val / {len(ds.split.test)} test, "
          f"{len(ds.ladder)} price classes")
    hidden = tuple(int(h) for h in args.hidden.split(","))
    config = NetworkConfig((41, *hidden, len(ds.ladder)), init_seed=args.seed)
    net, report = fit(config, ds, Hyperparams(max_epochs=args.max_epochs, seed=args.seed))
    if args.log:
        with open(args.log, "w") as fh:
            fh.write(report.to_csv())
    if args.model:
        save_model_file(ModelBundle(net, ds.ladder), args.model)
    m = evaluate(net, *ds.part("test"), ds.ladder)
    print(f"stopped ({report.stop_reason}) at epoch {len(report.epochs)}, best {report.best_epoch}")
    print(f"test top1 {m.top1:.4f}  top3 {m.top3:.4f}  top5 {m.top5:.4f}  APE {m.ape:.2f}%")


if __name__ == "__main__":
    main()
