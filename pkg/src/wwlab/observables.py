"""Expression trees of bounded observables.

Leaves are characters of a torus, Pinsker-type functions and centered
coordinates of a Bernoulli shift, and constants. Nodes close the class under
conjugation, products, sums, scalar multiples, composition with T^m, and
tensor products for product systems.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from functools import reduce
from numbers import Number

from .errors import NoClosedFormError
from .systems import MASK, Bernoulli, Product, TorusSystem, alpha_raw, binom


class Expr:
    """Base class; operators build simplified trees."""

    def __mul__(self, other):
        if isinstance(other, Number):
            return scale(other, self)
        return prod(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return scale(other, self)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, Number):
            other = Const(other)
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scale(-1, as_expr(other)))

    def conj(self):
        return conj(self)

    def shift(self, m: int):
        return shift(m, self)


def as_expr(x) -> Expr:
    return x if isinstance(x, Expr) else Const(x)


# ---------------------------------------------------------------- leaves


@dataclass(frozen=True)
class Const(Expr):
    value: complex = 1.0


@dataclass(frozen=True)
class TorusCharacter(Expr):
    """x -> e(a . x) on T^d."""

    freq: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "freq", tuple(int(a) for a in self.freq))


@dataclass(frozen=True)
class PinskerFn(Expr):
    """1_A - E(1_A | sigma(coordinates >= cutoff)) on a Bernoulli shift.

    ``cylinder`` fixes symbols at coordinates, all of which must be >= level,
    so A belongs to sigma(coordinates >= level).
    """

    cylinder: tuple[tuple[int, int], ...]
    cutoff: int
    level: int = 0

    def __post_init__(self):
        cyl = self.cylinder.items() if isinstance(self.cylinder, dict) else self.cylinder
        cyl = tuple(sorted((int(i), int(s)) for i, s in cyl))
        if not cyl:
            raise ValueError("cylinder must fix at least one coordinate")
        if len({i for i, _ in cyl}) != len(cyl):
            raise ValueError("cylinder fixes a coordinate twice")
        if any(i < self.level for i, _ in cyl):
            raise ValueError(f"cylinder indices must be >= level {self.level}")
        object.__setattr__(self, "cylinder", cyl)
        object.__setattr__(self, "cutoff", int(self.cutoff))
        object.__setattr__(self, "level", int(self.level))

    @property
    def vanishes(self) -> bool:
        return self.cutoff <= self.level

    def value(self, symbols: dict, probs) -> float:
        """Pointwise value given the symbols on the cylinder coordinates."""
        if self.vanishes:
            return 0.0
        ind = float(all(symbols[i] == s for i, s in self.cylinder))
        tail = all(symbols[i] == s for i, s in self.cylinder if i >= self.cutoff)
        marg = math.prod(probs[s] for i, s in self.cylinder if i < self.cutoff)
        return ind - (marg if tail else 0.0)


@dataclass(frozen=True)
class CenteredCoordinate(Expr):
    """x -> x_index - mean (torus coordinate or Bernoulli symbol)."""

    index: int
    mean: float = 0.5


# ---------------------------------------------------------------- nodes


@dataclass(frozen=True)
class Conj(Expr):
    child: Expr


@dataclass(frozen=True)
class Prod(Expr):
    children: tuple


@dataclass(frozen=True)
class Sum(Expr):
    children: tuple


@dataclass(frozen=True)
class Scale(Expr):
    c: complex
    child: Expr


@dataclass(frozen=True)
class Shift(Expr):
    """child o T^m."""

    m: int
    child: Expr


@dataclass(frozen=True)
class Tensor(Expr):
    """(x, y) -> left(x) * right(y) on a product system."""

    left: Expr
    right: Expr


LEAVES = (Const, TorusCharacter, PinskerFn, CenteredCoordinate)


# ---------------------------------------------------------------- constructors


def conj(e: Expr) -> Expr:
    if isinstance(e, Conj):
        return e.child
    if isinstance(e, Const):
        return Const(complex(e.value).conjugate())
    return Conj(e)


def shift(m: int, e: Expr) -> Expr:
    m = int(m)
    if m == 0 or isinstance(e, Const):
        return e
    if isinstance(e, Shift):
        return shift(m + e.m, e.child)
    return Shift(m, e)


def prod(*es) -> Expr:
    flat = []
    for e in es:
        flat.extend(e.children if isinstance(e, Prod) else (as_expr(e),))
    if not flat:
        return Const(1.0)
    return flat[0] if len(flat) == 1 else Prod(tuple(flat))


def add(*es) -> Expr:
    flat = []
    for e in es:
        flat.extend(e.children if isinstance(e, Sum) else (as_expr(e),))
    return flat[0] if len(flat) == 1 else Sum(tuple(flat))


def scale(c, e: Expr) -> Expr:
    if c == 1:
        return e
    if isinstance(e, Const):
        return Const(c * e.value)
    return Scale(c, e)


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` through the smart constructors."""
    if isinstance(e, LEAVES):
        return e
    if isinstance(e, Conj):
        return conj(simplify(e.child))
    if isinstance(e, Shift):
        return shift(e.m, simplify(e.child))
    if isinstance(e, Prod):
        return prod(*(simplify(c) for c in e.children))
    if isinstance(e, Sum):
        return add(*(simplify(c) for c in e.children))
    if isinstance(e, Scale):
        return scale(e.c, simplify(e.child))
    if isinstance(e, Tensor):
        return Tensor(simplify(e.left), simplify(e.right))
    raise TypeError(f"not an observable: {e!r}")


def children(e: Expr) -> tuple:
    if isinstance(e, (Conj, Scale, Shift)):
        return (e.child,)
    if isinstance(e, (Prod, Sum)):
        return e.children
    if isinstance(e, Tensor):
        return (e.left, e.right)
    return ()


# ---------------------------------------------------------------- structure


def sup_bound(e: Expr, system) -> float:
    """A bound on sup |e| computed bottom-up."""
    if isinstance(e, Const):
        return abs(e.value)
    if isinstance(e, TorusCharacter):
        return 1.0
    if isinstance(e, PinskerFn):
        return 0.0 if e.vanishes else 1.0
    if isinstance(e, CenteredCoordinate):
        top = system.alphabet - 1 if isinstance(system, Bernoulli) else 1.0
        return max(abs(e.mean), abs(top - e.mean))
    if isinstance(e, (Conj, Shift)):
        return sup_bound(e.child, system)
    if isinstance(e, Scale):
        return abs(e.c) * sup_bound(e.child, system)
    if isinstance(e, Prod):
        return math.prod(sup_bound(c, system) for c in e.children)
    if isinstance(e, Sum):
        return math.fsum(sup_bound(c, system) for c in e.children)
    if isinstance(e, Tensor):
        if not isinstance(system, Product):
            raise TypeError("Tensor observables need a product system")
        return sup_bound(e.left, system.left) * sup_bound(e.right, system.right)
    raise TypeError(f"not an observable: {e!r}")


def shift_range(e: Expr, base: int = 0) -> tuple[int, int]:
    """Smallest and largest accumulated shift applied to any leaf."""
    if isinstance(e, LEAVES):
        return (base, base)
    if isinstance(e, Shift):
        return shift_range(e.child, base + e.m)
    spans = [shift_range(c, base) for c in children(e)]
    return (min(s[0] for s in spans), max(s[1] for s in spans))


def coord_span(e: Expr) -> tuple[int, int]:
    """Coordinates read relative to the evaluation point (Bernoulli words)."""
    if isinstance(e, PinskerFn):
        return (e.cylinder[0][0], e.cylinder[-1][0])
    if isinstance(e, CenteredCoordinate):
        return (e.index, e.index)
    if isinstance(e, (Const, TorusCharacter)):
        return (0, 0)
    if isinstance(e, Shift):
        lo, hi = coord_span(e.child)
        return (lo + e.m, hi + e.m)
    spans = [coord_span(c) for c in children(e)]
    return (min(s[0] for s in spans), max(s[1] for s in spans))


def vertices(m: int):
    """Vertices of {0,1}^m, first coordinate varying fastest."""
    for code in range(1 << m):
        yield tuple((code >> i) & 1 for i in range(m))


def cube_product(f, h=(), j: int = 1) -> Expr:
    """prod over eta in {0,1}^m of c^{|eta|} f_eta o T^{j (h . eta)}.

    ``f`` is one observable or a sequence of 2^m observables indexed like
    :func:`vertices`.
    """
    h = tuple(int(v) for v in h)
    if any(v < 1 for v in h):
        raise ValueError("cube directions must be >= 1")
    if j < 1:
        raise ValueError("scale j must be >= 1")
    m = len(h)
    fs = [f] * (1 << m) if isinstance(f, Expr) else list(f)
    if len(fs) != 1 << m:
        raise ValueError(f"need {1 << m} observables for a cube of dimension {m}")
    factors = []
    for eta, g in zip(vertices(m), fs):
        s = j * sum(a * b for a, b in zip(h, eta))
        g = shift(s, g)
        factors.append(conj(g) if sum(eta) % 2 else g)
    return prod(*factors)


# ---------------------------------------------------------------- integrals


def _e(raw: int) -> complex:
    return cmath.exp(2j * math.pi * ((raw & MASK) / (1 << 64)))


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, c in p.items():
        for b, d in q.items():
            k = tuple(x + y for x, y in zip(a, b))
            out[k] = out.get(k, 0) + c * d
    return out


def _torus_poly(e: Expr, d: int, a_raw: int) -> dict:
    """Expand into {frequency: coefficient} over characters of T^d."""
    zero = (0,) * d
    if isinstance(e, Const):
        return {zero: complex(e.value)}
    if isinstance(e, TorusCharacter):
        if len(e.freq) != d:
            raise ValueError(f"character of dimension {len(e.freq)} on a {d}-torus")
        return {e.freq: 1.0 + 0j}
    if isinstance(e, Conj):
        return {tuple(-x for x in a): complex(c).conjugate() for a, c in _torus_poly(e.child, d, a_raw).items()}
    if isinstance(e, Scale):
        return {a: e.c * c for a, c in _torus_poly(e.child, d, a_raw).items()}
    if isinstance(e, Sum):
        out: dict = {}
        for ch in e.children:
            for a, c in _torus_poly(ch, d, a_raw).items():
                out[a] = out.get(a, 0) + c
        return out
    if isinstance(e, Prod):
        return reduce(_poly_mul, (_torus_poly(ch, d, a_raw) for ch in e.children))
    if isinstance(e, Shift):
        m = e.m
        cb = [binom(m, i) for i in range(d + 1)]
        out = {}
        for a, c in _torus_poly(e.child, d, a_raw).items():
            b = tuple(sum(a[i] * cb[i - l] for i in range(l, d)) for l in range(d))
            phase = sum(a[i] * cb[i + 1] for i in range(d)) * a_raw
            out[b] = out.get(b, 0) + c * _e(phase)
        return out
    raise NoClosedFormError(f"{type(e).__name__} has no character expansion")


def _bernoulli_terms(e: Expr, m: int = 0) -> list:
    """Expand into [(coef, ((leaf, offset), ...))]; leaves are real-valued."""
    if isinstance(e, Const):
        return [(complex(e.value), ())]
    if isinstance(e, (PinskerFn, CenteredCoordinate)):
        return [(1.0 + 0j, ((e, m),))]
    if isinstance(e, Shift):
        return _bernoulli_terms(e.child, m + e.m)
    if isinstance(e, Conj):
        return [(c.conjugate(), fs) for c, fs in _bernoulli_terms(e.child, m)]
    if isinstance(e, Scale):
        return [(e.c * c, fs) for c, fs in _bernoulli_terms(e.child, m)]
    if isinstance(e, Sum):
        return [t for ch in e.children for t in _bernoulli_terms(ch, m)]
    if isinstance(e, Prod):
        terms = [(1.0 + 0j, ())]
        for ch in e.children:
            sub = _bernoulli_terms(ch, m)
            terms = [(c * d, fs + gs) for c, fs in terms for d, gs in sub]
        return terms
    raise NoClosedFormError(f"{type(e).__name__} is not a Bernoulli cylinder observable")


def _leaf_coords(leaf, m):
    if isinstance(leaf, PinskerFn):
        return [i + m for i, _ in leaf.cylinder]
    return [leaf.index + m]


def _leaf_value(leaf, m, assign, probs):
    if isinstance(leaf, PinskerFn):
        return leaf.value({i: assign[i + m] for i, _ in leaf.cylinder}, probs)
    return assign[leaf.index + m] - leaf.mean


MAX_COMPONENT = 20


def _integrate_term(factors, probs) -> float:
    # independent coordinates: group factors whose coordinate sets overlap
    parent = list(range(len(factors)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner = {}
    for k, (leaf, m) in enumerate(factors):
        for c in _leaf_coords(leaf, m):
            if c in owner:
                parent[find(k)] = find(owner[c])
            else:
                owner[c] = k
    groups: dict = {}
    for k in range(len(factors)):
        groups.setdefault(find(k), []).append(factors[k])
    total = 1.0
    s = len(probs)
    for group in groups.values():
        coords = sorted({c for leaf, m in group for c in _leaf_coords(leaf, m)})
        if s ** len(coords) > 1 << MAX_COMPONENT:
            raise NoClosedFormError(f"component over {len(coords)} coordinates is too large to enumerate")
        acc = 0.0
        for syms in itertools.product(range(s), repeat=len(coords)):
            w = math.prod(probs[v] for v in syms)
            if w == 0.0:
                continue
            assign = dict(zip(coords, syms))
            acc += w * math.prod(_leaf_value(leaf, m, assign, probs) for leaf, m in group)
        total *= acc
        if total == 0.0:
            break
    return total


def _tensor_terms(e: Expr) -> list:
    """Expand into [(coef, left, right)] for a product system."""
    one = Const(1.0)
    if isinstance(e, Const):
        return [(complex(e.value), one, one)]
    if isinstance(e, Tensor):
        return [(1.0 + 0j, e.left, e.right)]
    if isinstance(e, Conj):
        return [(c.conjugate(), conj(l), conj(r)) for c, l, r in _tensor_terms(e.child)]
    if isinstance(e, Scale):
        return [(e.c * c, l, r) for c, l, r in _tensor_terms(e.child)]
    if isinstance(e, Shift):
        return [(c, shift(e.m, l), shift(e.m, r)) for c, l, r in _tensor_terms(e.child)]
    if isinstance(e, Sum):
        return [t for ch in e.children for t in _tensor_terms(ch)]
    if isinstance(e, Prod):
        terms = [(1.0 + 0j, one, one)]
        for ch in e.children:
            sub = _tensor_terms(ch)
            terms = [(c * d, prod(l, l2), prod(r, r2)) for c, l, r in terms for d, l2, r2 in sub]
        return terms
    raise NoClosedFormError(f"{type(e).__name__} is not a tensor observable")


def exact_integral(e: Expr, system) -> complex:
    """The integral of ``e`` against the invariant measure, when reducible."""
    if isinstance(system, TorusSystem):
        poly = _torus_poly(e, system.dim, alpha_raw(system))
        return complex(poly.get((0,) * system.dim, 0.0))
    if isinstance(system, Bernoulli):
        probs = system.probs
        return complex(sum(c * _integrate_term(fs, probs) for c, fs in _bernoulli_terms(e)))
    if isinstance(system, Product):
        return complex(sum(
            c * exact_integral(l, system.left) * exact_integral(r, system.right)
            for c, l, r in _tensor_terms(e)
        ))
    raise TypeError(f"unknown system {system!r}")
