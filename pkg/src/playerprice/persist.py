"""FPM1 binary model bundles and end-to-end price prediction.

Layout, little-endian throughout::

    b"FPM1"                      magic
    u32 version (=1)
    u32 L                        layer count
    u32 dims[L + 1]
    u8  activation[L]            0 relu, 1 tanh, 2 sigmoid, 3 softmax (last must be 3)
    per layer: f64 W[fan_out * fan_in] row-major, f64 b[fan_out]
    u32 C                        ladder length (== dims[L])
    f64 prices[C]                strictly increasing
    f64 bounds[41 * 2]           (lo, hi) pairs
"""
from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field
from typing import BinaryIO

import numpy as np

from .dataio import N_FEATURES, DataError, NormalizationSpec, PriceLadder, normalize_features
from .netcore import ACTIVATIONS, Network, predict_proba

MAGIC = b"FPM1"
VERSION = 1


class ModelFormatError(ValueError):
    pass


class BadMagicError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass


@dataclass
class ModelBundle:
    network: Network
    ladder: PriceLadder
    norm: NormalizationSpec = field(default_factory=NormalizationSpec)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.network.layer_sizes[-1] != len(self.ladder):
            raise ModelFormatError(
                f"output layer has {self.network.layer_sizes[-1]} units but ladder has "
                f"{len(self.ladder)} prices")


def encoded_size(dims, n_ladder: int) -> int:
    L = len(dims) - 1
    n_params = sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(L))
    return 4 + 4 + 4 + 4 * (L + 1) + L + 8 * n_params + 4 + 8 * n_ladder + 8 * 2 * N_FEATURES


def dumps(bundle: ModelBundle) -> bytes:
    net = bundle.network
    dims = net.layer_sizes
    parts = [MAGIC, struct.pack("<II", VERSION, net.n_layers),
             struct.pack(f"<{len(dims)}I", *dims),
             bytes(ACTIVATIONS.index(a) for a in net.activations)]
    for W, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    parts.append(struct.pack("<I", len(bundle.ladder)))
    parts.append(np.asarray(bundle.ladder.prices, dtype="<f8").tobytes())
    parts.append(np.asarray(bundle.norm.bounds, dtype="<f8").tobytes())
    return b"".join(parts)


def save_model(bundle: ModelBundle, sink: BinaryIO) -> int:
    data = dumps(bundle)
    sink.write(data)
    return len(data)


def save_model_file(bundle: ModelBundle, path) -> int:
    """Atomic write: temp file in the target directory, then rename."""
    data = dumps(bundle)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".fpm-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(data)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int, what: str) -> bytes:
        avail = len(self.data) - self.pos
        if avail < n:
            raise TruncatedModelError(
                f"truncated model while reading {what}: expected {n} bytes at offset "
                f"{self.pos}, only {avail} available")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32s(self, n: int, what: str) -> tuple[int, ...]:
        return struct.unpack(f"<{n}I", self.take(4 * n, what))

    def f64s(self, n: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(8 * n, what), dtype="<f8").astype(np.float64)


def loads(data: bytes) -> ModelBundle:
    r = _Reader(data)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (version,) = r.u32s(1, "version")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported FPM version {version}")
    (L,) = r.u32s(1, "layer count")
    if L < 1:
        raise ModelFormatError("model has no layers")
    dims = r.u32s(L + 1, "layer dims")
    if any(d < 1 for d in dims):
        raise ModelFormatError(f"zero-width layer in dims {list(dims)}")
    codes = r.take(L, "activations")
    if any(c >= len(ACTIVATIONS) for c in codes):
        raise ModelFormatError(f"unknown activation code in {list(codes)}")
    acts = [ACTIVATIONS[c] for c in codes]
    if acts[-1] != "softmax" or "softmax" in acts[:-1]:
        raise ModelFormatError(f"bad activation layout {acts}")
    weights, biases = [], []
    for l in range(L):
        fan_in, fan_out = dims[l], dims[l + 1]
        weights.append(r.f64s(fan_out * fan_in, f"layer {l + 1} weights").reshape(fan_out, fan_in))
        biases.append(r.f64s(fan_out, f"layer {l + 1} biases"))
    (C,) = r.u32s(1, "ladder length")
    if C != dims[-1]:
        raise ModelFormatError(f"ladder length {C} does not match output width {dims[-1]}")
    prices = r.f64s(C, "ladder prices")
    bounds = r.f64s(2 * N_FEATURES, "normalization bounds").reshape(N_FEATURES, 2)
    if r.pos != len(data):
        raise ModelFormatError(f"{len(data) - r.pos} trailing bytes after model")
    try:
        ladder = PriceLadder(tuple(prices.tolist()))
        norm = NormalizationSpec(tuple(map(tuple, bounds.tolist())))
    except DataError as exc:
        raise ModelFormatError(str(exc)) from None
    return ModelBundle(Network(weights, biases, acts), ladder, norm, {"version": version})


def load_model(source: BinaryIO) -> ModelBundle:
    return loads(source.read())


def load_model_file(path) -> ModelBundle:
    with open(path, "rb") as fh:
        return load_model(fh)


@dataclass(frozen=True)
class PricePrediction:
    index: int
    price: float
    window: list[tuple[int, float, float]]   # (class, price, probability)
    probs: np.ndarray


def predict_price(bundle: ModelBundle, raw_features) -> PricePrediction:
    x = np.asarray(raw_features, dtype=np.float64).reshape(-1)
    if x.size != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} features, got {x.size}")
    probs = predict_proba(bundle.network, normalize_features(x[None, :], bundle.norm))[0]
    c = int(np.argmax(probs))
    C = len(bundle.ladder)
    window = [(i, bundle.ladder.price_of(i), float(probs[i]))
              for i in range(max(0, c - 2), min(C - 1, c + 2) + 1)]
    return PricePrediction(c, bundle.ladder.price_of(c), window, probs)
