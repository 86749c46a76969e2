"""Higher-order Wiener-Wintner averages.

For a collection (g_eta) over the cube {0,1}^{k-1} the order-k average is

    H^{-(k-1)} sum_{h in [H]^{k-1}} || sup_t |(1/N) sum_{n=1}^N e(nt) F_h(T^n x)| ||_p^{2/3}

with F_h the cube product of the g_eta along h and H = floor(N^beta). All
terms are computed on one shared sample set.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BudgetError
from .evaluation import evaluator_for
from .observables import Expr, coord_span, cube_product, vertices
from .sampling import SamplePlan, batch_of, sample_batch
from .trig import DEFAULT_OVERSAMPLE, WeightedSeq, sup_modulus_batch

WW_EXPONENT = 2.0 / 3.0


def h_count(N: int, beta: float = 0.5) -> int:
    """floor(N^beta) in exact integer arithmetic."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    fr = Fraction(beta).limit_denominator(10**6)
    p, q = fr.numerator, fr.denominator
    target = N**p
    H = max(1, int(N ** float(fr)))
    while H**q > target:
        H -= 1
    while (H + 1) ** q <= target:
        H += 1
    return H


def as_collection(f, m: int) -> tuple:
    """A cube collection of 2^m observables."""
    if isinstance(f, Expr):
        return (f,) * (1 << m)
    fs = tuple(f)
    if len(fs) != 1 << m:
        raise ValueError(f"need {1 << m} observables, got {len(fs)}")
    return fs


def p_norm(x: np.ndarray, p: int) -> float:
    if p == 1:
        return float(np.mean(x))
    if p == 2:
        return float(math.sqrt(np.mean(x * x)))
    raise ValueError(f"p must be 1 or 2, got {p}")


def _norm_stderr(x: np.ndarray, p: int) -> float:
    S = len(x)
    if S < 2:
        return float("nan")
    if p == 1:
        return float(np.std(x, ddof=1) / math.sqrt(S))
    m = float(np.mean(x * x))
    if m == 0.0:
        return 0.0
    return float(np.std(x * x, ddof=1) / math.sqrt(S) / (2 * math.sqrt(m)))


def cube_sups(fs, system, batch, N: int, hs, j: int = 1, oversample: int = DEFAULT_OVERSAMPLE,
              refine: str = "parabolic", workers: int = 1) -> list:
    """Sup brackets of every cube-product orbit sequence, one per h.

    Orbit values of each g_eta are computed once over n in [1, N + shift]
    and the cube products are assembled from slices. The result list
    follows the order of ``hs`` whatever the number of workers.
    """
    hs = [tuple(h) for h in hs]
    m = len(hs[0]) if hs else 0
    fs = as_collection(fs, m)
    horizon = j * max((sum(h) for h in hs), default=0)
    distinct = list(dict.fromkeys(fs))
    ev = evaluator_for(system, batch, [(g, [1, N + horizon]) for g in distinct])
    base = {g: ev.range_values(g, 1, N + horizon + 1) for g in distinct}
    etas = list(vertices(m))

    def one(h):
        F = None
        for eta, g in zip(etas, fs):
            s = j * sum(a * b for a, b in zip(h, eta))
            blk = base[g][:, s : s + N]
            if sum(eta) % 2:
                blk = np.conj(blk)
            F = blk.copy() if F is None else F * blk
        return sup_modulus_batch(F, oversample, refine)

    if workers <= 1:
        return [one(h) for h in hs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(one, hs))


def ww_batch(fs, system, k: int, N: int, j: int = 1, beta: float = 0.5):
    """Sample window requirements: offsets [1, N + shift] and coordinate reach."""
    H = h_count(N, beta)
    horizon = j * (k - 1) * H
    coll = as_collection(fs, k - 1)
    spans = [coord_span(g) for g in coll]
    reach = (min(s[0] for s in spans), max(s[1] for s in spans))
    return 1, N + horizon, reach


@dataclass(frozen=True)
class WWQuery:
    f: object
    system: object
    k: int = 2
    N: int = 256
    p: int = 2
    beta: float = 0.5
    j: int = 1
    plan: SamplePlan = field(default_factory=lambda: SamplePlan(64))
    oversample: int = DEFAULT_OVERSAMPLE
    refine: str = "parabolic"
    exponent: float = WW_EXPONENT
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"order k must be >= 1, got {self.k}")
        if self.N < 4:
            raise ValueError(f"N must be >= 4, got {self.N}")
        if self.p not in (1, 2):
            raise ValueError(f"p must be 1 or 2, got {self.p}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.j < 1:
            raise ValueError(f"scale j must be >= 1, got {self.j}")
        as_collection(self.f, self.k - 1)

    def sample(self, stream=()):
        lo, hi, reach = ww_batch(self.f, self.system, self.k, self.N, self.j, self.beta)
        return sample_batch(self.system, self.plan, lo, hi, reach, stream)


@dataclass(frozen=True)
class WWResult:
    value: float
    certified_upper: float
    stderr: float
    N: int
    H: int
    per_h: tuple = ()


def ww_average(q: WWQuery, batch=None) -> WWResult:
    """The order-k WW average; ``value`` uses lower sup estimates."""
    H = h_count(q.N, q.beta)
    hs = list(itertools.product(range(1, H + 1), repeat=q.k - 1))
    if batch is None:
        batch = q.sample()
    sups = cube_sups(q.f, q.system, batch, q.N, hs, q.j, q.oversample, q.refine, q.workers)
    e = q.exponent
    lows, ups, ses, table = [], [], [], []
    for h, sb in zip(hs, sups):
        lo = p_norm(sb.lower, q.p)
        up = p_norm(sb.upper, q.p)
        se = _norm_stderr(sb.lower, q.p)
        lows.append(lo**e)
        ups.append(up**e)
        ses.append(e * lo ** (e - 1) * se if lo > 0 else 0.0)
        table.append((h, lo, up))
    count = len(hs)
    return WWResult(
        value=math.fsum(lows) / count,
        certified_upper=math.fsum(ups) / count,
        stderr=math.fsum(ses) / count,
        N=q.N,
        H=H,
        per_h=tuple(table),
    )


def ww_norm_term(f, system, h, N: int, p: int, plan: SamplePlan, j: int = 1,
                 oversample: int = DEFAULT_OVERSAMPLE, refine: str = "golden", batch=None):
    """(lower, upper) p-norms of the sup for one cube direction h.

    Evaluates the cube product expression directly rather than through the
    slice-sharing path of :func:`ww_average`.
    """
    F = cube_product(f, h, j)
    if batch is None:
        lo, hi = coord_span(F)
        batch = sample_batch(system, plan, 1, N, (lo, hi))
    ev = evaluator_for(system, batch, [(F, [1, N])])
    sb = sup_modulus_batch(ev.range_values(F, 1, N + 1), oversample, refine)
    return p_norm(sb.lower, p), p_norm(sb.upper, p)


UWW_BUDGET = 1 << 16


def uww_pointwise(g, system, x, N: int, k: int | None = None, j: int = 1,
                  oversample: int = DEFAULT_OVERSAMPLE, refine: str = "golden",
                  budget: int = UWW_BUDGET, workers: int = 1) -> tuple[float, float]:
    """(1/N^{k-1}) sum_{h in [N]^{k-1}} sup_t |...|^2 at the point x, as (lower, upper)."""
    if k is None:
        if isinstance(g, Expr):
            raise ValueError("pass k when g is a single observable")
        k = int(math.log2(len(g))) + 1
    if k < 2:
        raise ValueError("uniform WW probe needs k >= 2")
    if N ** (k - 1) > budget:
        raise BudgetError(f"N^(k-1) = {N ** (k - 1)} exceeds budget {budget}")
    hs = list(itertools.product(range(1, N + 1), repeat=k - 1))
    batch = batch_of(system, [x])
    sups = cube_sups(g, system, batch, N, hs, j, oversample, refine, workers)
    lower = math.fsum(float(sb.lower[0]) ** 2 for sb in sups) / len(hs)
    upper = math.fsum(float(sb.upper[0]) ** 2 for sb in sups) / len(hs)
    return lower, upper


def orbit_weights(obs, system, x, N: int):
    """(obs(T^n x))_{n=1..N} as a weighted sequence."""

    batch = batch_of(system, [x])
    ev = evaluator_for(system, batch, [(obs, [1, N])])
    return WeightedSeq(ev.range_values(obs, 1, N + 1)[0])
