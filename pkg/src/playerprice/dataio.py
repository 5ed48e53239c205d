"""Player table ingestion, synthetic generation, price ladder and splits.

CSV layout (UTF-8, header line required, no quoting)::

    skill_01, ..., skill_37, age, weak_foot, skill_moves, reputation, price

Skills are on a 0-99 scale, age on 16-43, the three star ratings on 1-5,
and price is a positive amount in USD. Header names are informative only;
the column count and numeric parse are what gets enforced.
"""
from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence

import numpy as np

N_SKILLS = 37
N_STARS = 3
N_FEATURES = N_SKILLS + 1 + N_STARS
N_COLUMNS = N_FEATURES + 1

SKILL_BOUNDS = (0.0, 99.0)
AGE_BOUNDS = (16.0, 43.0)
STAR_BOUNDS = (1.0, 5.0)

LADDER_MIN_PRICE = 43_000.0
LADDER_MAX_PRICE = 36_700_000.0

DEFAULT_FRACTIONS = (0.7115, 0.1256)

CSV_HEADER = (
    [f"skill_{i:02d}" for i in range(1, N_SKILLS + 1)]
    + ["age", "weak_foot", "skill_moves", "reputation", "price"]
)


class DataError(ValueError):
    """Raised for malformed player data."""


@dataclass(frozen=True)
class PlayerRecord:
    skills: tuple[float, ...]
    age: float
    stars: tuple[float, float, float]
    price: float

    def __post_init__(self):
        if len(self.skills) != N_SKILLS or len(self.stars) != N_STARS:
            raise DataError("player record must carry 37 skills and 3 star ratings")
        if not self.price > 0:
            raise DataError(f"price must be positive, got {self.price}")

    def features(self) -> np.ndarray:
        return np.array([*self.skills, self.age, *self.stars], dtype=np.float64)


@dataclass(frozen=True)
class PlayerTable:
    """Raw player attributes (N x 41, unnormalized) and prices."""

    features: np.ndarray
    prices: np.ndarray
    source: str = ""

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        prices = np.asarray(self.prices, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[1] != N_FEATURES:
            raise DataError(f"expected N x {N_FEATURES} features, got shape {feats.shape}")
        if len(feats) == 0:
            raise DataError("player table is empty")
        if prices.shape != (len(feats),):
            raise DataError("one price per player required")
        if np.any(~(prices > 0)):
            raise DataError("all prices must be positive")
        feats.setflags(write=False)
        prices.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "prices", prices)

    def __len__(self) -> int:
        return len(self.prices)

    @property
    def records(self) -> list[PlayerRecord]:
        out = []
        for row, price in zip(self.features, self.prices):
            out.append(PlayerRecord(
                skills=tuple(row[:N_SKILLS].tolist()),
                age=float(row[N_SKILLS]),
                stars=tuple(row[N_SKILLS + 1:].tolist()),
                price=float(price),
            ))
        return out

    @classmethod
    def from_records(cls, records: Iterable[PlayerRecord], source: str = "") -> "PlayerTable":
        records = list(records)
        if not records:
            raise DataError("player table is empty")
        feats = np.stack([r.features() for r in records])
        return cls(feats, np.array([r.price for r in records]), source)


@dataclass(frozen=True)
class PriceLadder:
    """Ascending distinct prices; class index i is the i-th rung."""

    prices: tuple[float, ...]

    def __post_init__(self):
        prices = tuple(float(p) for p in self.prices)
        if not prices:
            raise DataError("price ladder is empty")
        if any(not p > 0 for p in prices):
            raise DataError("ladder prices must be positive")
        if any(b <= a for a, b in zip(prices, prices[1:])):
            raise DataError("ladder prices must be strictly increasing")
        object.__setattr__(self, "prices", prices)

    def __len__(self) -> int:
        return len(self.prices)

    def price_of(self, index: int) -> float:
        return self.prices[index]

    def class_of(self, price: float) -> int:
        i = int(np.searchsorted(self.prices, price))
        if i == len(self.prices) or self.prices[i] != price:
            raise KeyError(f"price {price} is not on the ladder")
        return i

    def as_array(self) -> np.ndarray:
        return np.array(self.prices, dtype=np.float64)

    @classmethod
    def geometric(cls, n_classes: int, lo: float = LADDER_MIN_PRICE,
                  hi: float = LADDER_MAX_PRICE) -> "PriceLadder":
        # rounded to whole dollars like in-game prices
        return cls(tuple(np.round(np.geomspace(lo, hi, n_classes)).tolist()))


@dataclass(frozen=True)
class NormalizationSpec:
    """Fixed per-feature (lo, hi) bounds for min-max scaling."""

    bounds: tuple[tuple[float, float], ...] = field(default_factory=lambda: (
        (SKILL_BOUNDS,) * N_SKILLS + (AGE_BOUNDS,) + (STAR_BOUNDS,) * N_STARS
    ))

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) != N_FEATURES:
            raise DataError(f"need {N_FEATURES} bound pairs, got {len(bounds)}")
        for j, (lo, hi) in enumerate(bounds):
            if not hi > lo:
                raise DataError(f"feature {j}: hi ({hi}) must exceed lo ({lo})")
        object.__setattr__(self, "bounds", bounds)

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in ("train", "val", "test"):
            raise KeyError(name)
        return getattr(self, name)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    ladder: PriceLadder
    split: Split

    def part(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.split[name]
        return self.features[idx], self.labels[idx]


def parse_player_csv(stream: BinaryIO | bytes, source: str = "<stream>") -> PlayerTable:
    """Parse the 42-column player CSV into a table, reporting bad lines by number."""
    raw = stream if isinstance(stream, bytes) else stream.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{source}: not valid UTF-8 ({exc})") from None
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DataError(f"{source}: empty file")

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != N_COLUMNS:
            raise DataError(
                f"{source}: line {lineno}: expected {N_COLUMNS} fields, got {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError:
            bad = next(f for f in fields if not _is_float(f))
            raise DataError(f"{source}: line {lineno}: non-numeric field {bad!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise DataError(f"{source}: line {lineno}: non-finite value")
        if not values[-1] > 0:
            raise DataError(f"{source}: line {lineno}: non-positive price {fields[-1].strip()}")
        rows.append(values)
    if not rows:
        raise DataError(f"{source}: no data rows")
    arr = np.array(rows, dtype=np.float64)
    return PlayerTable(arr[:, :N_FEATURES], arr[:, N_FEATURES], source)


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_player_csv(path) -> PlayerTable:
    with open(path, "rb") as fh:
        return parse_player_csv(fh, source=str(path))


def format_player_csv(table: PlayerTable) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for row, price in zip(table.features, table.prices):
        buf.write(",".join(repr(float(v)) for v in (*row, price)) + "\n")
    return buf.getvalue().encode("utf-8")


# Fixed positive weights over normalized features used by the synthetic price rule.
_SYNTH_WEIGHTS = np.linspace(1.5, 0.5, N_FEATURES)
_SYNTH_NOISE = 0.05


def synthetic_score(normalized: np.ndarray) -> np.ndarray:
    """Standardized weighted feature sum; ~N(0, 1) for uniform features."""
    w = _SYNTH_WEIGHTS
    mean = 0.5 * w.sum()
    std = math.sqrt((w ** 2).sum() / 12.0)
    return (normalized @ w - mean) / std


def _score_to_class(score: np.ndarray, n_classes: int) -> np.ndarray:
    # monotone map: standard-normal CDF then equal-width bins in log-price
    from scipy.special import ndtr
    u = ndtr(score)
    return np.clip(np.floor(u * n_classes), 0, n_classes - 1).astype(np.int64)


def generate_synthetic(n: int, n_classes: int, seed: int) -> PlayerTable:
    """Desk-scale stand-in for the FIFA roster.

    Features are uniform within their nominal bounds. The class is a monotone
    function of a fixed weighted feature sum plus Gaussian noise, mapped onto a
    geometric ladder of ``n_classes`` prices between $43,000 and $36,700,000.
    The first ``n_classes`` players are drawn by rejection so that every rung
    is populated.
    """
    if n_classes < 2:
        raise DataError(f"need at least 2 classes, got {n_classes}")
    if n < n_classes:
        raise DataError(f"n ({n}) must be at least n_classes ({n_classes})")
    rng = np.random.default_rng(seed)
    spec = NormalizationSpec()
    lo, hi = spec.lo, spec.hi
    ladder = PriceLadder.geometric(n_classes)

    def draw(m):
        u = rng.random((m, N_FEATURES))
        noise = rng.normal(0.0, _SYNTH_NOISE, m)
        return u, _score_to_class(synthetic_score(u) + noise, n_classes)

    u, cls = draw(n)
    for target in range(n_classes):
        while cls[target] != target:
            row, c = draw(64)
            hit = np.flatnonzero(c == target)
            if hit.size:
                u[target], cls[target] = row[hit[0]], target
    feats = lo + u * (hi - lo)
    prices = ladder.as_array()[cls]
    return PlayerTable(feats, prices, f"synthetic:{seed}")


def build_price_ladder(prices: Sequence[float]) -> tuple[PriceLadder, np.ndarray]:
    prices = np.asarray(prices, dtype=np.float64)
    if prices.size == 0:
        raise DataError("no prices given")
    if np.any(~(prices > 0)):
        raise DataError("all prices must be positive")
    rungs, labels = np.unique(prices, return_inverse=True)
    return PriceLadder(tuple(rungs.tolist())), labels.astype(np.int64)


def normalize_features(table: PlayerTable | np.ndarray,
                       spec: NormalizationSpec | None = None) -> np.ndarray:
    """Affine map of each feature onto [0, 1] using nominal bounds; no clipping."""
    spec = spec or NormalizationSpec()
    x = table.features if isinstance(table, PlayerTable) else np.asarray(table, dtype=np.float64)
    lo, hi = spec.lo, spec.hi
    outside = int(np.count_nonzero((x < lo) | (x > hi)))
    if outside:
        warnings.warn(f"{outside} feature values outside nominal bounds", stacklevel=2)
    return (x - lo) / (hi - lo)


def denormalize_features(z: np.ndarray, spec: NormalizationSpec | None = None) -> np.ndarray:
    spec = spec or NormalizationSpec()
    lo, hi = spec.lo, spec.hi
    return lo + np.asarray(z) * (hi - lo)


def split_sizes(n: int, fractions: tuple[float, float] = DEFAULT_FRACTIONS) -> tuple[int, int, int]:
    train, val = fractions
    if not (0 < train and 0 < val and train + val < 1):
        raise DataError(f"invalid split fractions {fractions}")
    if n < 3:
        raise DataError(f"need at least 3 rows to split, got {n}")
    n_train = math.floor(n * train)
    n_val = math.floor(n * val)
    return n_train, n_val, n - n_train - n_val


def split_dataset(n: int, fractions: tuple[float, float] = DEFAULT_FRACTIONS,
                  seed: int = 0) -> Split:
    n_train, n_val, _ = split_sizes(n, fractions)
    perm = np.random.default_rng(seed).permutation(n)
    return Split(perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:])


def make_dataset(table: PlayerTable, fractions: tuple[float, float] = DEFAULT_FRACTIONS,
                 seed: int = 0, spec: NormalizationSpec | None = None) -> Dataset:
    ladder, labels = build_price_ladder(table.prices)
    feats = normalize_features(table, spec)
    return Dataset(feats, labels, ladder, split_dataset(len(table), fractions, seed))
