"""Finite-H Gowers-Host-Kra seminorms and side-by-side equivalence probes.

At finite H the recursion unrolls to

    |||f|||_k^{2^k} = H^{-(k-1)} sum_{h in [H]^{k-1}} |integral of the cube product of f along h|^2,

since iterated multiplicative derivatives along h_1, ..., h_{k-1} give the
cube product over {0,1}^{k-1}.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, NoClosedFormError
from .evaluation import evaluator_for
from .observables import conj, coord_span, cube_product, exact_integral, shift, vertices
from .sampling import SamplePlan, sample_batch
from .ww import WWQuery, cube_sups, p_norm, ww_average

SEMINORM_BUDGET = 1 << 20
MAX_ORDER = 4
INTEGRATION = ("auto", "exact", "sampled")


def inner_corr(f, system, h: int, plan: SamplePlan | None = None, with_stderr: bool = False):
    """integral of f * conj(f o T^h); exact when reducible, else sampled."""
    if h < 0:
        raise ValueError("h must be >= 0")
    g = f * conj(shift(h, f))
    try:
        value, se = exact_integral(g, system), 0.0
    except NoClosedFormError:
        if plan is None:
            raise
        value, se = _sampled_integrals(f, system, [(h,)], plan)
        value, se = value[0], se[0]
    return (value, se) if with_stderr else value


def _sampled_integrals(f, system, hs, plan):
    """Monte Carlo integrals of cube products with per-h standard errors."""
    m = len(hs[0])
    horizon = max(sum(h) for h in hs)
    lo, hi = coord_span(f)
    batch = sample_batch(system, plan, 0, horizon, (lo, hi))
    ev = evaluator_for(system, batch, [(f, [0, horizon])])
    base = ev.range_values(f, 0, horizon + 1)
    cbase = np.conj(base)
    etas = list(vertices(m))
    vals, ses = [], []
    S = len(batch)
    for h in hs:
        prod = np.ones(S, dtype=np.complex128)
        for eta in etas:
            s = sum(a * b for a, b in zip(h, eta))
            prod = prod * (cbase[:, s] if sum(eta) % 2 else base[:, s])
        vals.append(complex(prod.mean()))
        ses.append(float(np.std(prod, ddof=1) / math.sqrt(S)) if S > 1 else float("nan"))
    return vals, ses


@dataclass(frozen=True)
class SeminormQuery:
    f: object
    system: object
    k: int = 2
    H: int = 64
    integration: str = "auto"
    plan: SamplePlan | None = None
    budget: int = SEMINORM_BUDGET
    max_order: int = MAX_ORDER

    def __post_init__(self):
        if not 2 <= self.k <= self.max_order:
            raise ValueError(f"order k must lie in [2, {self.max_order}], got {self.k}")
        if self.H < 1:
            raise ValueError("H must be >= 1")
        if self.integration not in INTEGRATION:
            raise ValueError(f"integration must be one of {INTEGRATION}")
        if self.integration == "sampled" and self.plan is None:
            raise ValueError("sampled integration needs a sample plan")


@dataclass(frozen=True)
class SeminormResult:
    value: float
    power: float
    stderr: float
    exact: bool
    correlations: tuple = field(default=(), repr=False)

    def __float__(self):
        return self.value


def seminorm_estimate(q: SeminormQuery) -> SeminormResult:
    """The finite-H seminorm with its 2^k-th power and standard error."""
    count = q.H ** (q.k - 1)
    if count > q.budget:
        raise BudgetError(f"H^(k-1) = {count} integrals exceed budget {q.budget}")
    hs = list(itertools.product(range(1, q.H + 1), repeat=q.k - 1))
    exact = q.integration != "sampled"
    if exact:
        try:
            corr = [exact_integral(cube_product(q.f, h), q.system) for h in hs]
            ses = [0.0] * len(hs)
        except NoClosedFormError:
            if q.integration == "exact" or q.plan is None:
                raise
            exact = False
    if not exact:
        corr, ses = _sampled_integrals(q.f, q.system, hs, q.plan)
    power = math.fsum(abs(c) ** 2 for c in corr) / count
    se = math.sqrt(math.fsum((2 * abs(c) * s) ** 2 for c, s in zip(corr, ses))) / count
    return SeminormResult(power ** (1.0 / 2**q.k), power, se, exact, tuple(corr))


def ghk_seminorm(q: SeminormQuery) -> float:
    return seminorm_estimate(q).value


# ---------------------------------------------------------------- probes

PROBE_COLUMNS = ("N", "ww_2b", "ww_3b", "ww_4b", "seminorm_finiteH", "stderr")


def equivalence_probe(f, system, k: int, Ns, H: int = 64, plan: SamplePlan = SamplePlan(64),
                      h_cap: int = 16, oversample: int = 8, workers: int = 1) -> list[dict]:
    """Finite-N surrogates of the pointwise, norm and WW characterizations.

    ww_2b and ww_3b average over h in [min(N, h_cap)]^{k-1}; ww_2b is taken
    at the first sample point. The seminorm column is the order k+1 value at H.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    sem = seminorm_estimate(SeminormQuery(f, system, k + 1, H, "auto", plan))
    rows = []
    for N in Ns:
        q = WWQuery(f, system, k, N, 2, 0.5, 1, plan, oversample, "parabolic", workers=workers)
        hc = min(N, h_cap)
        hi = N + (k - 1) * max(hc, math.isqrt(N))
        batch = sample_batch(system, plan, 1, hi, coord_span(f))
        ww4 = ww_average(q, batch=batch).value
        hs = list(itertools.product(range(1, hc + 1), repeat=k - 1))
        sups = cube_sups(f, system, batch, N, hs, 1, oversample, "parabolic", workers)
        ww2 = math.fsum(float(sb.lower[0]) ** 2 for sb in sups) / len(hs)
        ww3 = math.fsum(p_norm(sb.lower, 2) ** 2 for sb in sups) / len(hs)
        rows.append({"N": N, "ww_2b": ww2, "ww_3b": ww3, "ww_4b": ww4,
                     "seminorm_finiteH": sem.value, "stderr": sem.stderr})
    return rows


def probe_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROBE_COLUMNS)
    for r in rows:
        w.writerow([r["N"]] + [format(float(r[c]), ".17g") for c in PROBE_COLUMNS[1:]])
    return buf.getvalue()
