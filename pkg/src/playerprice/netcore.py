"""Dense feed-forward network with softmax output, cross-entropy + L2 loss."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

ACTIVATIONS = ("relu", "tanh", "sigmoid", "softmax")
HIDDEN_ACTIVATIONS = ACTIVATIONS[:3]

PAPER_LAYERS = (41, 2000, 1500, 500, 119)
PROB_FLOOR = 1e-300


@dataclass(frozen=True)
class NetworkConfig:
    layer_sizes: tuple[int, ...] = PAPER_LAYERS
    hidden_activation: str = "relu"
    init_seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"layer_sizes needs >= 2 positive entries, got {self.layer_sizes}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        object.__setattr__(self, "layer_sizes", sizes)


@dataclass
class Network:
    """Layer ``l`` maps fan-in to fan-out with ``weights[l]`` of shape (fan_out, fan_in)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)) or not self.weights:
            raise ValueError("weights, biases and activations must have equal non-zero length")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ValueError(f"layer {l}: bias shape {b.shape} does not match weights {W.shape}")
            if l and W.shape[1] != self.weights[l - 1].shape[0]:
                raise ValueError(f"layer {l}: fan-in {W.shape[1]} != previous fan-out "
                                 f"{self.weights[l - 1].shape[0]}")
        if self.activations[-1] != "softmax":
            raise ValueError("output activation must be softmax")
        if any(a not in HIDDEN_ACTIVATIONS for a in self.activations[:-1]):
            raise ValueError(f"bad hidden activations {self.activations[:-1]}")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(W.shape[0] for W in self.weights)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def params(self) -> list[np.ndarray]:
        """Flat parameter list [W1, b1, W2, b2, ...]."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def with_params(self, params: Sequence[np.ndarray]) -> "Network":
        return Network(list(params[0::2]), list(params[1::2]), list(self.activations))

    def copy(self) -> "Network":
        return self.with_params([p.copy() for p in self.params()])

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params())


@dataclass
class ForwardCache:
    pre: list[np.ndarray]    # z_l, one per layer
    post: list[np.ndarray]   # a_0 = X, then a_l per layer

    @property
    def probs(self) -> np.ndarray:
        return self.post[-1]


@dataclass
class Gradients:
    dW: list[np.ndarray]
    db: list[np.ndarray]

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.dW, self.db):
            out += [W, b]
        return out

    @classmethod
    def from_params(cls, params: Sequence[np.ndarray]) -> "Gradients":
        return cls(list(params[0::2]), list(params[1::2]))


def init_network(config: NetworkConfig) -> Network:
    """He-initialized weights (std sqrt(2/fan_in)), zero biases."""
    rng = np.random.default_rng(config.init_seed)
    sizes = config.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    acts = [config.hidden_activation] * (len(sizes) - 2) + ["softmax"]
    return Network(weights, biases, acts)


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "softmax":
        return softmax(z)
    raise ValueError(f"unknown activation {kind!r}")


def activation_derivative(kind: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """d a / d z elementwise, given pre-activation z and output a."""
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "sigmoid":
        return a * (1.0 - a)
    raise ValueError(f"no elementwise derivative for {kind!r}")


def forward(net: Network, X: np.ndarray) -> ForwardCache:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != net.layer_sizes[0]:
        raise ValueError(f"input has {X.shape[1]} columns, network expects {net.layer_sizes[0]}")
    pre, post = [], [X]
    a = X
    for W, b, kind in zip(net.weights, net.biases, net.activations):
        z = a @ W.T + b
        a = activate(kind, z)
        pre.append(z)
        post.append(a)
    return ForwardCache(pre, post)


def weight_penalty(net: Network) -> float:
    return float(sum(np.sum(W * W) for W in net.weights))


def loss_total(cache: ForwardCache, labels: np.ndarray, lam: float, net: Network) -> float:
    """Mean cross-entropy plus lam * sum of squared weights (biases unpenalized)."""
    labels = np.asarray(labels)
    p = cache.probs[np.arange(len(labels)), labels]
    ce = -np.mean(np.log(np.maximum(p, PROB_FLOOR)))
    if lam == 0:
        return float(ce)
    return float(ce + lam * weight_penalty(net))


def backward(net: Network, cache: ForwardCache, labels: np.ndarray, lam: float) -> Gradients:
    labels = np.asarray(labels)
    if len(cache.pre) != net.n_layers or cache.probs.shape[1] != net.layer_sizes[-1]:
        raise ValueError("forward cache does not belong to this network")
    B = len(labels)
    delta = cache.probs.copy()
    delta[np.arange(B), labels] -= 1.0
    delta /= B
    L = net.n_layers
    dW, db = [None] * L, [None] * L
    for l in range(L - 1, -1, -1):
        dW[l] = delta.T @ cache.post[l]
        if lam:
            dW[l] = dW[l] + 2.0 * lam * net.weights[l]
        db[l] = delta.sum(axis=0)
        if l:
            delta = (delta @ net.weights[l]) * activation_derivative(
                net.activations[l - 1], cache.pre[l - 1], cache.post[l])
    return Gradients(dW, db)


def loss_and_gradients(net: Network, X: np.ndarray, labels: np.ndarray,
                       lam: float) -> tuple[float, Gradients]:
    cache = forward(net, X)
    return loss_total(cache, labels, lam, net), backward(net, cache, labels, lam)


def central_difference(f: Callable[[list[np.ndarray]], float],
                       params: Sequence[np.ndarray], h: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradient of scalar ``f`` w.r.t. every entry of ``params``."""
    if not h > 0:
        raise ValueError("h must be positive")
    params = [np.array(p, dtype=np.float64) for p in params]
    grads = [np.zeros_like(p) for p in params]
    for p, g in zip(params, grads):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f(params)
            flat[i] = orig - h
            down = f(params)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
    return grads


def finite_diff_gradient(net: Network, X: np.ndarray, labels: np.ndarray,
                         lam: float, h: float = 1e-5) -> Gradients:
    def f(params):
        candidate = net.with_params(params)
        return loss_total(forward(candidate, X), labels, lam, candidate)

    return Gradients.from_params(central_difference(f, net.params(), h))


def predict_proba(net: Network, X: np.ndarray) -> np.ndarray:
    return forward(net, X).probs


def predict_classes(net: Network, X: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. lowest-index tie-break
    return np.argmax(predict_proba(net, X), axis=1)


def predict_class(net: Network, x: np.ndarray) -> int:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict_class takes a single feature vector")
    return int(predict_classes(net, x[None, :])[0])
