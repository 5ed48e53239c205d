"""Command-line entry point: gen, train, eval, predict, sweep.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from .dataio import (DEFAULT_FRACTIONS, N_FEATURES, DataError, format_player_csv,
                     generate_synthetic, make_dataset, normalize_features,
                     read_player_csv, split_dataset)
from .netcore import HIDDEN_ACTIVATIONS, NetworkConfig
from .optim import Hyperparams
from .persist import (ModelBundle, ModelFormatError, load_model_file, predict_price,
                      save_model_file)
from .trainer import SweepCell, SweepSpec, evaluate, fit, sweep, sweep_to_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"layer widths must be positive, got {text!r}")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="playerprice", description="Football player price classifier")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="write a synthetic player CSV")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--classes", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train a model on a player CSV")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--hidden", type=_int_list, default=(2000, 1500, 500))
    t.add_argument("--activation", choices=HIDDEN_ACTIVATIONS, default="relu")
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--anneal", type=float, default=0.001)
    t.add_argument("--momentum", type=float, default=0.99)
    t.add_argument("--l2", type=float, default=0.0005)
    t.add_argument("--batch", type=int, default=20)
    t.add_argument("--patience", type=int, default=10)
    t.add_argument("--max-epochs", type=int, default=1000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--log", help="per-epoch CSV log path")
    t.add_argument("--log-timing", action="store_true",
                   help="include wall-clock seconds in the log (breaks byte-reproducibility)")

    e = sub.add_parser("eval", help="report metrics on one split")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--split", choices=("train", "val", "test"), required=True)
    e.add_argument("--seed", type=int, default=0)

    pr = sub.add_parser("predict", help="price one player")
    pr.add_argument("--model", required=True)
    pr.add_argument("--features", type=_float_list, required=True)

    s = sub.add_parser("sweep", help="run a hyperparameter grid from a CSV of cells")
    s.add_argument("--spec", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--parallel", type=int, default=1)
    s.add_argument("--repetitions", type=int, default=1)
    s.add_argument("--seed", type=int, default=0, help="split seed")
    return p


def _write_text(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def cmd_gen(args) -> int:
    table = generate_synthetic(args.n, args.classes, args.seed)
    with open(f"{args.out}.tmp", "wb") as fh:
        fh.write(format_player_csv(table))
    os.replace(f"{args.out}.tmp", args.out)
    print(f"wrote {len(table)} players to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    hp = Hyperparams(eta0=args.lr, anneal_k=args.anneal, mu=args.momentum, lam=args.l2,
                     batch_size=args.batch, patience=args.patience,
                     max_epochs=args.max_epochs, seed=args.seed)
    ds = make_dataset(read_player_csv(args.data), seed=args.seed)
    config = NetworkConfig((N_FEATURES, *args.hidden, len(ds.ladder)),
                           args.activation, init_seed=args.seed)
    net, report = fit(config, ds, hp)
    bundle = ModelBundle(net, ds.ladder, metadata={"hyperparams": hp, "seed": args.seed})
    save_model_file(bundle, args.out)
    if args.log:
        _write_text(args.log, report.to_csv(timing=args.log_timing))
    m = evaluate(net, *ds.part("val"), ds.ladder)
    print(f"stopped: {report.stop_reason} after {len(report.epochs)} epochs; "
          f"best epoch {report.best_epoch}")
    print(f"val top1 {m.top1:.4f} top3 {m.top3:.4f} top5 {m.top5:.4f} ape {m.ape:.2f}%")
    return EXIT_OK


def cmd_eval(args) -> int:
    bundle = load_model_file(args.model)
    table = read_player_csv(args.data)
    try:
        labels = np.array([bundle.ladder.class_of(p) for p in table.prices])
    except KeyError as exc:
        raise DataError(f"{args.data}: {exc.args[0]}") from None
    idx = split_dataset(len(table), DEFAULT_FRACTIONS, args.seed)[args.split]
    X = normalize_features(table, bundle.norm)[idx]
    m = evaluate(bundle.network, X, labels[idx], bundle.ladder)
    print(f"top1 {m.top1:.4f}")
    print(f"top3 {m.top3:.4f}")
    print(f"top5 {m.top5:.4f}")
    print(f"ape {m.ape:.4f}")
    return EXIT_OK


def cmd_predict(args) -> int:
    if len(args.features) != N_FEATURES:
        raise UsageError(f"--features: expected {N_FEATURES} values, got {len(args.features)}")
    bundle = load_model_file(args.model)
    pred = predict_price(bundle, args.features)
    print(f"class {pred.index}")
    print(f"price {pred.price:.0f}")
    for c, price, prob in pred.window:
        mark = "*" if c == pred.index else " "
        print(f"{mark} class {c:4d}  price {price:>12.0f}  p {prob:.4f}")
    return EXIT_OK


SWEEP_COLUMNS = {
    "hidden": ("config", "layer_sizes", _int_list),
    "activation": ("config", "hidden_activation", str),
    "lr": ("hp", "eta0", float),
    "anneal": ("hp", "anneal_k", float),
    "momentum": ("hp", "mu", float),
    "l2": ("hp", "lam", float),
    "batch": ("hp", "batch_size", int),
    "patience": ("hp", "patience", int),
    "max_epochs": ("hp", "max_epochs", int),
    "seed": ("hp", "seed", int),
}


def read_sweep_cells(path, n_classes: int) -> list[SweepCell]:
    """Cells CSV: a ``name`` column plus any of SWEEP_COLUMNS; blanks keep defaults."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: no sweep cells")
    cells = []
    for lineno, row in enumerate(rows, start=2):
        if not row.get("name"):
            raise DataError(f"{path}: line {lineno}: missing cell name")
        cfg, hp = {"layer_sizes": (2000, 1500, 500)}, {}
        for col, value in row.items():
            if col == "name" or value is None or not value.strip():
                continue
            if col not in SWEEP_COLUMNS:
                raise DataError(f"{path}: unknown column {col!r}")
            target, key, conv = SWEEP_COLUMNS[col]
            try:
                (cfg if target == "config" else hp)[key] = conv(value.strip())
            except (ValueError, argparse.ArgumentTypeError):
                raise DataError(f"{path}: line {lineno}: bad {col} value {value!r}") from None
        cfg["layer_sizes"] = (N_FEATURES, *cfg["layer_sizes"], n_classes)
        cfg["init_seed"] = hp.get("seed", 0)
        try:
            cells.append(SweepCell(row["name"], NetworkConfig(**cfg), Hyperparams(**hp)))
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
    return cells


def cmd_sweep(args) -> int:
    ds = make_dataset(read_player_csv(args.data), seed=args.seed)
    spec = SweepSpec(tuple(read_sweep_cells(args.spec, len(ds.ladder))), args.repetitions)
    rows = sweep(spec, ds, parallel=args.parallel)
    _write_text(args.out, sweep_to_csv(rows))
    failed = sum(r["status"] != "ok" for r in rows if isinstance(r["repetition"], int))
    print(f"wrote {len(rows)} rows to {args.out} ({failed} failed runs)")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval,
            "predict": cmd_predict, "sweep": cmd_sweep}


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
