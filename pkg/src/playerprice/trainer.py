"""Fit loop with early stopping, ordinal top-k / APE metrics, and a sweep harness."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .dataio import Dataset, PriceLadder
from .netcore import (Network, NetworkConfig, init_network, loss_and_gradients,
                      predict_classes)
from .optim import (Hyperparams, OptimizerState, anneal_rate, epoch_seed,
                    make_minibatches, nesterov_step)

log = logging.getLogger(__name__)

# top-k in the ordinal sense: predicted rung within this distance of the true rung
TOPK_DISTANCE = {1: 0, 3: 1, 5: 2}

EPOCH_LOG_FIELDS = ["epoch", "train_loss", "train_top1", "val_top1", "val_top3",
                    "val_top5", "val_ape", "eta", "seconds"]


@dataclass(frozen=True)
class MetricsBundle:
    top1: float
    top3: float
    top5: float
    ape: float
    n: int


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_loss: float
    train_top1: float
    val_top1: float
    val_top3: float
    val_top5: float
    val_ape: float
    eta: float
    seconds: float


@dataclass
class TrainingReport:
    epochs: list[EpochLog] = field(default_factory=list)
    best_epoch: int = 0
    best_val_top1: float = -math.inf
    stop_reason: str = ""

    def to_csv(self, timing: bool = True) -> str:
        fields = EPOCH_LOG_FIELDS if timing else EPOCH_LOG_FIELDS[:-1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for e in self.epochs:
            w.writerow([repr(getattr(e, f)) if isinstance(getattr(e, f), float)
                        else getattr(e, f) for f in fields])
        return buf.getvalue()


def top_k_correct(pred: int, actual: int, k: int) -> bool:
    return abs(int(pred) - int(actual)) <= TOPK_DISTANCE[k]


def average_percentage_error(preds: Sequence[int], actuals: Sequence[int],
                             ladder: PriceLadder) -> float:
    preds, actuals = np.asarray(preds), np.asarray(actuals)
    if preds.size == 0 or preds.shape != actuals.shape:
        raise ValueError("need equal-length, non-empty prediction and label lists")
    prices = ladder.as_array()
    true, guess = prices[actuals], prices[preds]
    return float(np.mean(np.abs(true - guess) / true) * 100.0)


def metrics_from_predictions(preds: np.ndarray, actuals: np.ndarray,
                             ladder: PriceLadder) -> MetricsBundle:
    preds, actuals = np.asarray(preds), np.asarray(actuals)
    if preds.size == 0:
        raise ValueError("empty evaluation set")
    dist = np.abs(preds - actuals)
    return MetricsBundle(
        top1=float(np.mean(dist <= TOPK_DISTANCE[1])),
        top3=float(np.mean(dist <= TOPK_DISTANCE[3])),
        top5=float(np.mean(dist <= TOPK_DISTANCE[5])),
        ape=average_percentage_error(preds, actuals, ladder),
        n=int(preds.size),
    )


def evaluate(net: Network, features: np.ndarray, labels: np.ndarray,
             ladder: PriceLadder) -> MetricsBundle:
    if len(labels) == 0:
        raise ValueError("empty evaluation set")
    return metrics_from_predictions(predict_classes(net, features), labels, ladder)


def train_epoch(net: Network, state: OptimizerState, X: np.ndarray, y: np.ndarray,
                hp: Hyperparams, epoch: int) -> tuple[Network, OptimizerState, float]:
    """One pass over the training data; ``epoch`` counts completed epochs."""
    eta = anneal_rate(hp.eta0, hp.anneal_k, epoch)
    total = 0.0
    for batch in make_minibatches(len(y), hp.batch_size, epoch_seed(hp.seed, epoch)):
        Xb, yb = X[batch], y[batch]
        seen = []

        def grad_at(params, Xb=Xb, yb=yb, seen=seen):
            loss, grads = loss_and_gradients(net.with_params(params), Xb, yb, hp.lam)
            seen.append(loss)
            return grads.params()

        net = nesterov_step(net, state, grad_at, eta, hp.mu)
        total += seen[0] * len(batch)
    state.epoch = epoch + 1
    state.current_rate = eta
    return net, state, total / len(y)


Evaluator = Callable[[Network], MetricsBundle]


def fit(config: NetworkConfig, dataset: Dataset, hp: Hyperparams,
        val_evaluator: Evaluator | None = None,
        net: Network | None = None) -> tuple[Network, TrainingReport]:
    """Train until validation top-1 stalls for ``hp.patience`` epochs.

    Returns the parameters from the best validation epoch. ``val_evaluator``
    replaces the default validation-split evaluation (useful for tests).
    """
    Xtr, ytr = dataset.part("train")
    Xva, yva = dataset.part("val")
    if len(ytr) == 0 or len(yva) == 0:
        raise ValueError("train and validation splits must be non-empty")
    if val_evaluator is None:
        def val_evaluator(n):
            return evaluate(n, Xva, yva, dataset.ladder)

    net = net if net is not None else init_network(config)
    state = OptimizerState.zeros_like(net.params())
    report = TrainingReport()
    best = net
    stale = 0
    for e in range(1, hp.max_epochs + 1):
        t0 = time.perf_counter()
        # divergence is detected explicitly below
        with np.errstate(over="ignore", invalid="ignore"):
            net, state, loss = train_epoch(net, state, Xtr, ytr, hp, e - 1)
        if not (math.isfinite(loss) and net.is_finite()):
            report.stop_reason = "diverged"
            log.warning("training diverged at epoch %d", e)
            break
        tr = evaluate(net, Xtr, ytr, dataset.ladder)
        va = val_evaluator(net)
        report.epochs.append(EpochLog(e, loss, tr.top1, va.top1, va.top3, va.top5, va.ape,
                                      state.current_rate, time.perf_counter() - t0))
        log.debug("epoch %d loss %.4f val top1 %.4f", e, loss, va.top1)
        if va.top1 > report.best_val_top1:
            report.best_val_top1, report.best_epoch, best = va.top1, e, net
            stale = 0
        else:
            stale += 1
            if stale >= hp.patience:
                report.stop_reason = "patience"
                break
    else:
        report.stop_reason = "max_epochs"
    return best, report


@dataclass(frozen=True)
class SweepCell:
    name: str
    config: NetworkConfig = NetworkConfig()
    hp: Hyperparams = Hyperparams()


@dataclass(frozen=True)
class SweepSpec:
    cells: tuple[SweepCell, ...]
    repetitions: int = 1

    def __post_init__(self):
        if not self.cells:
            raise ValueError("sweep needs at least one cell")
        if self.repetitions < 1:
            raise ValueError("repetitions must be positive")


SWEEP_FIELDS = ["cell", "repetition", "status", "top1", "top3", "top5", "ape",
                "best_epoch", "seconds", "error"]


def repetition_seed(seed: int, rep: int) -> int:
    """Repetition 0 keeps the cell's own seed so a 1x1 sweep equals a direct fit."""
    if rep == 0:
        return seed
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, rep]).generate_state(1)[0])


def _run_cell(cell: SweepCell, rep: int, dataset: Dataset) -> dict:
    seed = repetition_seed(cell.hp.seed, rep)
    init_seed = repetition_seed(cell.config.init_seed, rep)
    row = {"cell": cell.name, "repetition": rep}
    t0 = time.perf_counter()
    try:
        config = replace(cell.config, init_seed=init_seed)
        net, report = fit(config, dataset, replace(cell.hp, seed=seed))
        m = evaluate(net, *dataset.part("val"), dataset.ladder)
        row.update(status="ok", top1=m.top1, top3=m.top3, top5=m.top5, ape=m.ape,
                   best_epoch=report.best_epoch, error="")
    except Exception as exc:  # recorded, not fatal to the sweep
        row.update(status="error", top1=math.nan, top3=math.nan, top5=math.nan,
                   ape=math.nan, best_epoch=0, error=f"{type(exc).__name__}: {exc}")
    row["seconds"] = time.perf_counter() - t0
    return row


def sweep(spec: SweepSpec, dataset: Dataset, parallel: int = 1) -> list[dict]:
    """Run every (cell, repetition); append per-cell mean and std rows."""
    jobs = [(cell, rep) for cell in spec.cells for rep in range(spec.repetitions)]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(_run_cell, c, r, dataset) for c, r in jobs]
            rows = [f.result() for f in futures]
    else:
        rows = [_run_cell(c, r, dataset) for c, r in jobs]

    out = list(rows)
    for cell in spec.cells:
        ok = [r for r in rows if r["cell"] == cell.name and r["status"] == "ok"]
        for stat, fn in (("mean", np.mean), ("std", np.std)):
            agg = {"cell": cell.name, "repetition": stat,
                   "status": "ok" if ok else "error", "error": ""}
            for key in ("top1", "top3", "top5", "ape", "best_epoch", "seconds"):
                agg[key] = float(fn([r[key] for r in ok])) if ok else math.nan
            out.append(agg)
    return out


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in SWEEP_FIELDS})
    return buf.getvalue()
