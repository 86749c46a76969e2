"""Concrete measure-preserving systems with exact orbit maps.

Torus coordinates are held in 64-bit fixed point: a coordinate x in [0, 1)
is stored as the integer round(x * 2**64) mod 2**64. Addition and
multiplication by integers then wrap exactly, so the closed-form n-step map
of a skew product agrees bit for bit with step-by-step iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import WindowError

ONE = 1 << 64
MASK = ONE - 1
_SCALE = 2.0**-64
SNAP = 1e-15


def to_raw(x: float) -> int:
    """Fixed-point representation of x mod 1."""
    if not math.isfinite(x):
        raise ValueError(f"coordinate must be finite, got {x}")
    frac = x - math.floor(x)
    if frac >= 1.0 - SNAP:
        frac = 0.0
    return round(frac * ONE) & MASK


def from_raw(r: int) -> float:
    x = (int(r) & MASK) / ONE
    return 0.0 if x >= 1.0 - SNAP else x


def raw_to_unit(raw: np.ndarray) -> np.ndarray:
    """Vectorized fixed point to float in [0, 1)."""
    x = raw.astype(np.float64) * _SCALE
    x[x >= 1.0 - SNAP] = 0.0
    return x


def binom(n: int, j: int) -> int:
    """Binomial coefficient C(n, j) for any integer n, j >= 0."""
    if j < 0:
        return 0
    if n >= 0:
        return math.comb(n, j)
    return (-1) ** j * math.comb(-n + j - 1, j)


def faulhaber_poly(j: int, n: int) -> int:
    """P_j(n), the j-th iterated partial sum of the identity.

    P_1(n) = n and P_j(n) = sum_{m<n} P_{j-1}(m), so P_j(n) = C(n, j).
    Python integers are unbounded, so the value is always exact.
    """
    if j < 2:
        raise ValueError(f"j must be >= 2, got {j}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return math.comb(n, j)


def binomial_rows(lo: int, hi: int, depth: int) -> np.ndarray:
    """C(m, j) mod 2**64 for m in [lo, hi] and j = 0..depth, shape (depth+1, R).

    Built by Pascal's rule along m, one step per offset.
    """
    if hi < lo:
        raise ValueError("empty offset range")
    R = hi - lo + 1
    rows = np.empty((depth + 1, R), dtype=np.uint64)
    rows[0] = 1
    for j in range(1, depth + 1):
        rows[j, 0] = binom(lo, j) & MASK
        if R > 1:
            rows[j, 1:] = np.cumsum(rows[j - 1, :-1], dtype=np.uint64)
            rows[j, 1:] += rows[j, 0]
    return rows


# ---------------------------------------------------------------- points


@dataclass(frozen=True)
class TorusPoint:
    """A point of T^d in fixed point."""

    raw: tuple[int, ...]

    def __post_init__(self):
        if len(self.raw) < 1:
            raise ValueError("torus point needs at least one coordinate")
        object.__setattr__(self, "raw", tuple(int(r) & MASK for r in self.raw))

    @classmethod
    def of(cls, coords) -> "TorusPoint":
        return cls(tuple(to_raw(float(c)) for c in coords))

    @property
    def coords(self) -> tuple[float, ...]:
        return tuple(from_raw(r) for r in self.raw)

    @property
    def dim(self) -> int:
        return len(self.raw)


@dataclass(frozen=True, eq=False)
class SymbolWord:
    """A finite window of a two-sided sequence.

    ``symbols[origin + i]`` is the coordinate labeled i.
    """

    symbols: np.ndarray
    origin: int = 0

    def __post_init__(self):
        s = np.asarray(self.symbols, dtype=np.uint8)
        if s.ndim != 1:
            raise ValueError("symbols must be a 1-d vector")
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "symbols", s)
        object.__setattr__(self, "origin", int(self.origin))

    @property
    def length(self) -> int:
        return len(self.symbols)

    def coord(self, i: int) -> int:
        k = self.origin + i
        if not 0 <= k < self.length:
            raise WindowError(
                f"coordinate {i} outside window [{-self.origin}, {self.length - self.origin - 1}]"
            )
        return int(self.symbols[k])

    def __eq__(self, other):
        if not isinstance(other, SymbolWord):
            return NotImplemented
        return self.origin == other.origin and np.array_equal(self.symbols, other.symbols)

    def __hash__(self):
        return hash((self.origin, self.symbols.tobytes()))


# ---------------------------------------------------------------- systems


def _check_angle(angle: float):
    if not (0.0 < angle < 1.0):
        raise ValueError(f"angle must lie in (0, 1), got {angle}")


@dataclass(frozen=True)
class Rotation:
    angle: float

    def __post_init__(self):
        _check_angle(self.angle)

    @property
    def dim(self) -> int:
        return 1

    def describe(self) -> str:
        return f"Rotation({self.angle!r})"


@dataclass(frozen=True)
class Skew:
    """(x_1, ..., x_d) -> (x_1 + a, x_2 + x_1, ..., x_d + x_{d-1})."""

    dim: int
    angle: float

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"skew product needs dim >= 2, got {self.dim}")
        _check_angle(self.angle)

    def describe(self) -> str:
        return f"Skew({self.dim}, {self.angle!r})"


@dataclass(frozen=True)
class Bernoulli:
    """Left shift on sequences with i.i.d. coordinates of law ``probs``."""

    probs: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.probs)
        if len(p) < 1 or len(p) > 256:
            raise ValueError("alphabet size must be between 1 and 256")
        if any(v < 0 or not math.isfinite(v) for v in p):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {math.fsum(p)}, not 1")
        object.__setattr__(self, "probs", p)

    @property
    def alphabet(self) -> int:
        return len(self.probs)

    def describe(self) -> str:
        return f"Bernoulli{self.probs!r}"


@dataclass(frozen=True)
class Product:
    left: "SystemSpec"
    right: "SystemSpec"

    def describe(self) -> str:
        return f"Product({self.left.describe()}, {self.right.describe()})"


SystemSpec = Union[Rotation, Skew, Bernoulli, Product]
TorusSystem = (Rotation, Skew)


def alpha_raw(system) -> int:
    return to_raw(system.angle)


def check_point(system, point):
    """Reject a point whose kind does not match the system."""
    if isinstance(system, TorusSystem):
        if not isinstance(point, TorusPoint):
            raise TypeError(f"{system.describe()} expects a TorusPoint, got {type(point).__name__}")
        if point.dim != system.dim:
            raise TypeError(f"point has dimension {point.dim}, system has {system.dim}")
    elif isinstance(system, Bernoulli):
        if not isinstance(point, SymbolWord):
            raise TypeError(f"{system.describe()} expects a SymbolWord, got {type(point).__name__}")
        if point.length and int(point.symbols.max()) >= system.alphabet:
            raise ValueError("word uses symbols outside the alphabet")
    elif isinstance(system, Product):
        if not (isinstance(point, tuple) and len(point) == 2):
            raise TypeError("product systems expect a pair of points")
        check_point(system.left, point[0])
        check_point(system.right, point[1])
    else:
        raise TypeError(f"unknown system {system!r}")


def _torus_iterate(raw: tuple[int, ...], a: int, n: int) -> tuple[int, ...]:
    # y_i = sum_{j<=i} C(n, j) x_{i-j} + C(n, i+1) a, coordinates 0-based
    d = len(raw)
    c = [binom(n, j) for j in range(d + 1)]
    return tuple(
        (sum(c[j] * raw[i - j] for j in range(i + 1)) + c[i + 1] * a) & MASK for i in range(d)
    )


def iterate(system, point, n: int):
    """T^n(point) by closed form; negative n is allowed on tori."""
    check_point(system, point)
    n = int(n)
    if isinstance(system, TorusSystem):
        return TorusPoint(_torus_iterate(point.raw, alpha_raw(system), n))
    if isinstance(system, Bernoulli):
        origin = point.origin + n
        if not 0 <= origin < point.length:
            raise WindowError(f"iterate({n}) moves the origin outside a window of length {point.length}")
        return SymbolWord(point.symbols, origin)
    return (iterate(system.left, point[0], n), iterate(system.right, point[1], n))


def step(system, point):
    """One application of T, computed from the defining map."""
    check_point(system, point)
    if isinstance(system, TorusSystem):
        r = point.raw
        a = alpha_raw(system)
        return TorusPoint(((r[0] + a) & MASK,) + tuple((r[i] + r[i - 1]) & MASK for i in range(1, len(r))))
    if isinstance(system, Bernoulli):
        return iterate(system, point, 1)
    return (step(system.left, point[0]), step(system.right, point[1]))
