"""Minibatch scheduling, learning-rate annealing and Nesterov momentum updates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class Hyperparams:
    eta0: float = 0.01
    anneal_k: float = 0.001
    mu: float = 0.99
    lam: float = 0.0005
    batch_size: int = 20
    patience: int = 10
    max_epochs: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.eta0 > 0:
            raise ValueError(f"eta0 must be positive, got {self.eta0}")
        if not self.anneal_k >= 0:
            raise ValueError(f"anneal_k must be >= 0, got {self.anneal_k}")
        if not 0 <= self.mu < 1:
            raise ValueError(f"mu must lie in [0, 1), got {self.mu}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        for name in ("batch_size", "patience", "max_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass
class OptimizerState:
    velocity: list[np.ndarray]
    epoch: int = 0
    current_rate: float = field(default=float("nan"))

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "OptimizerState":
        return cls([np.zeros_like(p) for p in params])


def anneal_rate(eta0: float, k: float, t: int) -> float:
    """eta0 / (1 + k t), with t the number of completed epochs."""
    return eta0 / (1.0 + k * t)


def epoch_seed(run_seed: int, epoch: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(run_seed) & 0xFFFFFFFF, int(epoch)])


def make_minibatches(n: int, batch_size: int, seed) -> list[np.ndarray]:
    """Shuffle 0..n-1 with ``seed`` and cut into ceil(n / batch_size) batches."""
    if n < 1 or batch_size < 1:
        raise ValueError("n and batch_size must be positive")
    perm = np.random.default_rng(seed).permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def nesterov_step(params, state: OptimizerState,
                  grad_at: Callable[[list[np.ndarray]], Sequence[np.ndarray]],
                  eta: float, mu: float):
    """One Nesterov update: the gradient is taken at the lookahead w + mu*v.

    ``params`` is a list of arrays or anything with ``params()`` and
    ``with_params()`` (a Network); the same kind is returned.
    ``state.velocity`` is replaced in place.
    """
    if hasattr(params, "with_params"):
        return params.with_params(nesterov_step(params.params(), state, grad_at, eta, mu))
    if len(params) != len(state.velocity) or any(
            p.shape != v.shape for p, v in zip(params, state.velocity)):
        raise ValueError("velocity shapes do not match parameters")
    if mu:
        lookahead = [p + mu * v for p, v in zip(params, state.velocity)]
    else:
        lookahead = list(params)
    grads = grad_at(lookahead)
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ValueError("gradient shapes do not match parameters")
    if mu:
        state.velocity = [mu * v - eta * g for v, g in zip(state.velocity, grads)]
        return [p + v for p, v in zip(params, state.velocity)]
    state.velocity = [-eta * g for g in grads]
    return [p - eta * g for p, g in zip(params, grads)]
