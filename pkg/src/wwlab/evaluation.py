"""Vectorized evaluation of observables along orbits of sampled points.

An :class:`Evaluator` covers one batch of points and a contiguous range of
orbit offsets [lo, hi]. Leaf values over the whole range are computed once
and cached; shifts in an expression move the offsets, so composition with
T^m is a slice of a cached table.
"""

from __future__ import annotations

import math
import threading

import numpy as np

from .errors import WindowError
from .observables import (
    CenteredCoordinate,
    Conj,
    Const,
    PinskerFn,
    Prod,
    Scale,
    Shift,
    Sum,
    Tensor,
    TorusCharacter,
    shift_range,
)
from .sampling import ProductBatch, TorusBatch, WordBatch, batch_of
from .systems import MASK, Bernoulli, Product, TorusSystem, alpha_raw, binomial_rows

TWO_PI = 2.0 * math.pi


def unit_phase(raw: np.ndarray) -> np.ndarray:
    """e(raw / 2**64) for uint64 phases."""
    theta = raw.view(np.int64).astype(np.float64) * (TWO_PI * 2.0**-64)
    return np.exp(1j * theta)


class Evaluator:
    """Observable values at T^n x for x in a batch and n in [lo, hi]."""

    def __init__(self, system, batch, lo: int, hi: int):
        if hi < lo:
            raise ValueError("empty offset range")
        self.system = system
        self.batch = batch
        self.lo = int(lo)
        self.hi = int(hi)
        self.size = len(batch)
        self._cache: dict = {}
        self._lock = threading.Lock()
        if isinstance(system, Product):
            if not isinstance(batch, ProductBatch):
                raise TypeError("product system needs a product batch")
            self.left = Evaluator(system.left, batch.left, lo, hi)
            self.right = Evaluator(system.right, batch.right, lo, hi)
        elif isinstance(system, TorusSystem):
            if not isinstance(batch, TorusBatch) or batch.raw.shape[1] != system.dim:
                raise TypeError(f"{system.describe()} needs a torus batch of dimension {system.dim}")
        elif isinstance(system, Bernoulli):
            if not isinstance(batch, WordBatch):
                raise TypeError(f"{system.describe()} needs a word batch")
        else:
            raise TypeError(f"unknown system {system!r}")

    # ------------------------------------------------------------ public

    def values(self, expr, offsets) -> np.ndarray:
        """Array of shape (S, len(offsets)) with expr(T^n x_s)."""
        offsets = np.asarray(offsets, dtype=np.int64)
        return self._eval(expr, offsets)

    def range_values(self, expr, start: int, stop: int) -> np.ndarray:
        """values(expr, arange(start, stop))."""
        return self._eval(expr, np.arange(start, stop, dtype=np.int64))

    # ------------------------------------------------------------ internals

    def _eval(self, e, off: np.ndarray) -> np.ndarray:
        if isinstance(e, Const):
            return np.full((self.size, len(off)), complex(e.value))
        if isinstance(e, Shift):
            return self._eval(e.child, off + e.m)
        if isinstance(e, Conj):
            return np.conj(self._eval(e.child, off))
        if isinstance(e, Scale):
            return e.c * self._eval(e.child, off)
        if isinstance(e, Prod):
            out = self._eval(e.children[0], off)
            for ch in e.children[1:]:
                out = out * self._eval(ch, off)
            return out
        if isinstance(e, Sum):
            out = self._eval(e.children[0], off)
            for ch in e.children[1:]:
                out = out + self._eval(ch, off)
            return out
        if isinstance(e, Tensor):
            if not isinstance(self.system, Product):
                raise TypeError("Tensor observables need a product system")
            return self.left._eval(e.left, off) * self.right._eval(e.right, off)
        return self._take(self._leaf(e), off)

    def _take(self, table: np.ndarray, off: np.ndarray) -> np.ndarray:
        if len(off) == 0:
            return table[:, :0]
        a, b = int(off.min()), int(off.max())
        if a < self.lo or b > self.hi:
            raise ValueError(f"offsets [{a}, {b}] outside evaluator range [{self.lo}, {self.hi}]")
        idx = off - self.lo
        if len(off) == b - a + 1 and off[0] == a and np.all(np.diff(off) == 1):
            return table[:, a - self.lo : b - self.lo + 1]
        return table[:, idx]

    def _leaf(self, leaf) -> np.ndarray:
        key = ("leaf", leaf)
        table = self._cache.get(key)
        if table is None:
            with self._lock:
                table = self._cache.get(key)
                if table is None:
                    table = self._compute_leaf(leaf)
                    table.flags.writeable = False
                    self._cache[key] = table
        return table

    def _compute_leaf(self, leaf) -> np.ndarray:
        sys = self.system
        if isinstance(sys, Product):
            raise TypeError(f"{type(leaf).__name__} on a product system must sit inside a Tensor")
        if isinstance(sys, TorusSystem):
            return self._torus_leaf(leaf)
        return self._word_leaf(leaf)

    def _coordinate(self, i: int) -> np.ndarray:
        key = ("coord", i)
        if key not in self._cache:
            if "rows" not in self._cache:
                self._cache["rows"] = binomial_rows(self.lo, self.hi, self.system.dim)
            rows = self._cache["rows"]
            x = self.batch.raw
            y = rows[i + 1][None, :] * np.uint64(alpha_raw(self.system))
            for j in range(i + 1):
                y = y + rows[j][None, :] * x[:, i - j][:, None]
            self._cache[key] = y
        return self._cache[key]

    def _torus_leaf(self, leaf) -> np.ndarray:
        d = self.system.dim
        if isinstance(leaf, TorusCharacter):
            if len(leaf.freq) != d:
                raise ValueError(f"character of dimension {len(leaf.freq)} on a {d}-torus")
            phase = np.zeros((self.size, self.hi - self.lo + 1), dtype=np.uint64)
            for i, a in enumerate(leaf.freq):
                if a:
                    phase += np.uint64(a & MASK) * self._coordinate(i)
            return unit_phase(phase)
        if isinstance(leaf, CenteredCoordinate):
            if not 0 <= leaf.index < d:
                raise ValueError(f"coordinate index {leaf.index} outside dimension {d}")
            y = self._coordinate(leaf.index).astype(np.float64) * 2.0**-64
            y[y >= 1.0 - 1e-15] = 0.0
            return (y - leaf.mean).astype(np.complex128)
        raise TypeError(f"{type(leaf).__name__} is not a torus observable")

    def _window(self, i: int) -> np.ndarray:
        """Symbols at coordinate i of T^n x for n in [lo, hi]."""
        sym = self.batch.symbols
        a = self.batch.origin + self.lo + i
        b = self.batch.origin + self.hi + i
        if a < 0 or b >= sym.shape[1]:
            W = sym.shape[1]
            o = self.batch.origin
            raise WindowError(
                f"reading coordinates [{self.lo + i}, {self.hi + i}] from words covering [{-o}, {W - o - 1}]"
            )
        return sym[:, a : b + 1]

    def _word_leaf(self, leaf) -> np.ndarray:
        probs = self.system.probs
        shape = (self.size, self.hi - self.lo + 1)
        if isinstance(leaf, CenteredCoordinate):
            return (self._window(leaf.index).astype(np.float64) - leaf.mean).astype(np.complex128)
        if isinstance(leaf, PinskerFn):
            if leaf.vanishes:
                return np.zeros(shape, dtype=np.complex128)
            head = np.ones(shape, dtype=bool)
            tail = np.ones(shape, dtype=bool)
            marg = 1.0
            for i, s in leaf.cylinder:
                hit = self._window(i) == s
                if i >= leaf.cutoff:
                    tail &= hit
                else:
                    head &= hit
                    marg *= probs[s]
            out = (head & tail).astype(np.float64) - marg * tail
            return out.astype(np.complex128)
        raise TypeError(f"{type(leaf).__name__} is not a Bernoulli observable")


def evaluator_for(system, batch, expr_offsets) -> Evaluator:
    """An evaluator wide enough for every (expr, offsets) pair given."""
    lo, hi = None, None
    for expr, offsets in expr_offsets:
        s0, s1 = shift_range(expr)
        offsets = np.asarray(offsets)
        a, b = int(offsets.min()) + s0, int(offsets.max()) + s1
        lo = a if lo is None else min(lo, a)
        hi = b if hi is None else max(hi, b)
    return Evaluator(system, batch, lo, hi)


def eval_obs(obs, system, point) -> complex:
    """obs(point)."""
    batch = batch_of(system, [point])
    ev = evaluator_for(system, batch, [(obs, [0])])
    return complex(ev.values(obs, [0])[0, 0])
