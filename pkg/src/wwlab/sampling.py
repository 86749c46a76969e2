"""Seeded sampling of invariant measures.

All randomness comes from ``numpy.random.SeedSequence(seed, spawn_key=keys)``.
Keys name the consumer, so sub-results (a trial, a product component) can be
regenerated on their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .systems import (
    MASK,
    Bernoulli,
    Product,
    SymbolWord,
    TorusPoint,
    TorusSystem,
    check_point,
)

SCHEMES = ("pseudorandom", "lattice")


@dataclass(frozen=True)
class SamplePlan:
    count: int
    seed: int = 0
    scheme: str = "pseudorandom"

    def __post_init__(self):
        if int(self.count) < 1:
            raise ValueError(f"sample count must be >= 1, got {self.count}")
        if not 0 <= int(self.seed) <= MASK:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")


def derive_seed(seed: int, *keys: int) -> int:
    """A child 64-bit seed for the consumer named by ``keys``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------- batches


@dataclass(frozen=True, eq=False)
class TorusBatch:
    raw: np.ndarray  # (S, d) uint64

    def __len__(self):
        return self.raw.shape[0]

    def point(self, i: int) -> TorusPoint:
        return TorusPoint(tuple(int(v) for v in self.raw[i]))

    def points(self) -> list:
        return [self.point(i) for i in range(len(self))]


@dataclass(frozen=True, eq=False)
class WordBatch:
    symbols: np.ndarray  # (S, W) uint8, shared origin
    origin: int

    def __len__(self):
        return self.symbols.shape[0]

    def point(self, i: int) -> SymbolWord:
        return SymbolWord(self.symbols[i], self.origin)

    def points(self) -> list:
        return [self.point(i) for i in range(len(self))]


@dataclass(frozen=True, eq=False)
class ProductBatch:
    left: object
    right: object

    def __len__(self):
        return len(self.left)

    def point(self, i: int):
        return (self.left.point(i), self.right.point(i))

    def points(self) -> list:
        return [self.point(i) for i in range(len(self))]


def batch_of(system, points) -> object:
    """Stack explicit points into a batch."""
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    for p in points:
        check_point(system, p)
    if isinstance(system, TorusSystem):
        return TorusBatch(np.array([p.raw for p in points], dtype=np.uint64).reshape(len(points), -1))
    if isinstance(system, Bernoulli):
        origins = {p.origin for p in points}
        lengths = {p.length for p in points}
        if len(origins) != 1 or len(lengths) != 1:
            raise ValueError("words in one batch must share origin and length")
        return WordBatch(np.stack([p.symbols for p in points]), origins.pop())
    return ProductBatch(
        batch_of(system.left, [p[0] for p in points]),
        batch_of(system.right, [p[1] for p in points]),
    )


def _coprime_generator(n: int) -> int:
    if n <= 2:
        return 1
    g = max(1, round(n * (math.sqrt(5) - 1) / 2))
    while math.gcd(g, n) != 1:
        g += 1
    return g


def _lattice(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    # randomly shifted rank-1 Korobov lattice, exact in fixed point
    g = _coprime_generator(n)
    z = [pow(g, j, n) for j in range(d)]
    shift = [int(v) for v in rng.integers(0, MASK, size=d, endpoint=True, dtype=np.uint64)]
    out = np.empty((n, d), dtype=np.uint64)
    for i in range(n):
        for j in range(d):
            out[i, j] = (((i * z[j]) % n) * (1 << 64) // n + shift[j]) & MASK
    return out


def sample_batch(system, plan: SamplePlan, lo: int = 0, hi: int = 0, reach=(0, 0), stream=()):
    """Sample ``plan.count`` points.

    For Bernoulli systems each word covers every coordinate in
    [lo + reach[0], hi + reach[1]] together with coordinate 0, where [lo, hi]
    is the range of orbit offsets and ``reach`` the coordinates an observable
    reads relative to the current point.
    """
    S = int(plan.count)
    if isinstance(system, Product):
        return ProductBatch(
            sample_batch(system.left, plan, lo, hi, reach, tuple(stream) + (0,)),
            sample_batch(system.right, plan, lo, hi, reach, tuple(stream) + (1,)),
        )
    if isinstance(system, TorusSystem):
        rng = rng_for(plan.seed, *stream)
        if plan.scheme == "lattice":
            return TorusBatch(_lattice(rng, S, system.dim))
        return TorusBatch(rng.integers(0, MASK, size=(S, system.dim), endpoint=True, dtype=np.uint64))
    if isinstance(system, Bernoulli):
        first = min(0, lo + reach[0])
        last = max(0, hi + reach[1])
        probs = np.asarray(system.probs)
        # coordinates >= 0 and < 0 come from separate streams, filled one
        # coordinate at a time, so a wider window extends a narrower one
        pos = rng_for(plan.seed, *stream, 0).choice(system.alphabet, size=(last + 1, S), p=probs)
        neg = rng_for(plan.seed, *stream, 1).choice(system.alphabet, size=(-first, S), p=probs)
        symbols = np.concatenate([neg[::-1].T, pos.T], axis=1).astype(np.uint8)
        return WordBatch(np.ascontiguousarray(symbols), -first)
    raise TypeError(f"unknown system {system!r}")


def sample_points(system, plan: SamplePlan, horizon: int = 0, span: int = 0) -> list:
    """Sampled points able to absorb shifts up to ``horizon``.

    ``span`` is the largest coordinate an observable reads.
    """
    return sample_batch(system, plan, min(0, horizon), max(0, horizon), (0, span)).points()
