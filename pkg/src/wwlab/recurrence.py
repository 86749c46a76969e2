"""Multiple recurrence and return-times averages, and checks of their bounds."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ThresholdError
from .evaluation import evaluator_for
from .observables import coord_span, scale, sup_bound
from .sampling import SamplePlan, batch_of, sample_batch
from .trig import DEFAULT_OVERSAMPLE, sup_modulus_batch
from .ww import WWQuery, h_count, p_norm, ww_average

ABS_TOL = 1e-6


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class CheckReport:
    """Both sides of one inequality check.

    ``certified`` compares lhs and rhs directly; because upper sup estimates
    sit on the left and lower ones on the right it is conservative.
    ``passed`` also allows the bracket widths in ``slack``.
    """

    check: str
    system: str
    lhs: float
    rhs: float
    constant: float
    passed: bool
    certified: bool
    tolerance: float
    seed: int | None = None
    params: dict = field(default_factory=dict)
    brackets: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["margin"] = self.margin
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, tuple):
        return list(x)
    return str(x)


def make_report(check, system, lhs, rhs, constant, *, seed=None, params=None, brackets=None,
                slack=0.0, abs_tol=ABS_TOL, rel_tol=0.0) -> CheckReport:
    tol = abs_tol + rel_tol * abs(rhs)
    return CheckReport(
        check=check,
        system=system.describe() if hasattr(system, "describe") else str(system),
        lhs=float(lhs),
        rhs=float(rhs),
        constant=float(constant),
        passed=bool(lhs <= rhs + tol + slack),
        certified=bool(lhs <= rhs + tol),
        tolerance=float(tol + slack),
        seed=seed,
        params=dict(params or {}),
        brackets=dict(brackets or {}),
    )


def normalize(fs, system):
    """Rescale each observable by its sup-norm bound; returns (scaled, factors)."""
    out, factors = [], []
    for f in fs:
        b = sup_bound(f, system)
        c = 1.0 / b if b > 0 else 1.0
        out.append(scale(c, f))
        factors.append(c)
    return out, factors


# ---------------------------------------------------------------- averages


@dataclass(frozen=True)
class RecurrenceQuery:
    fs: tuple
    exponents: tuple
    system: object
    N: int
    p: int = 1
    plan: SamplePlan = field(default_factory=lambda: SamplePlan(1024))

    def __post_init__(self):
        object.__setattr__(self, "fs", tuple(self.fs))
        object.__setattr__(self, "exponents", tuple(int(a) for a in self.exponents))
        if len(self.fs) < 1 or len(self.fs) != len(self.exponents):
            raise ValueError("need one exponent per observable and at least one observable")
        if any(a == 0 for a in self.exponents):
            raise ValueError("exponents must be nonzero")
        if len(set(self.exponents)) != len(self.exponents):
            raise ValueError("exponents must be pairwise distinct")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.p not in (1, 2):
            raise ValueError(f"p must be 1 or 2, got {self.p}")

    @property
    def J(self) -> int:
        return len(self.fs)

    def window(self):
        """(lo, hi, reach) covering every offset a_j n, n in [1, N]."""
        ends = [a * n for a in self.exponents for n in (1, self.N)]
        spans = [coord_span(f) for f in self.fs]
        return min(ends), max(ends), (min(s[0] for s in spans), max(s[1] for s in spans))


def orbit_product(fs, exponents, system, batch, N: int) -> np.ndarray:
    """prod_j f_j(T^{a_j n} x) for n = 1..N, shape (S, N)."""
    n = np.arange(1, N + 1, dtype=np.int64)
    ev = evaluator_for(system, batch, [(f, a * n) for f, a in zip(fs, exponents)])
    out = None
    for f, a in zip(fs, exponents):
        v = ev.values(f, a * n)
        out = v.copy() if out is None else out * v
    return out


def recurrence_rows(q: RecurrenceQuery, batch) -> np.ndarray:
    return orbit_product(q.fs, q.exponents, q.system, batch, q.N).mean(axis=1)


def recurrence_avg_at_point(q: RecurrenceQuery, x) -> complex:
    """(1/N) sum_{n=1}^N prod_j f_j(T^{a_j n} x)."""
    return complex(recurrence_rows(q, batch_of(q.system, [x]))[0])


def recurrence_norm(q: RecurrenceQuery, batch=None) -> float:
    if batch is None:
        lo, hi, reach = q.window()
        batch = sample_batch(q.system, q.plan, lo, hi, reach)
    return p_norm(np.abs(recurrence_rows(q, batch)), q.p)


# ---------------------------------------------------------------- Bourgain bounds


def bourgain_constant(J: int, a) -> tuple[float, int]:
    """(C_J, N_J) assembled from the explicit proof steps.

    J = 2: C = (1 + sqrt 2) sqrt(4|a_2| + 2|a_1| + 2) |a_1|, N_2 = 1.
    J >= 3: C_J = sqrt(6|a_1| + 4|a_1| C_{J-1}) + sqrt(4 C_{J-1} |a_1|) with
    C_{J-1} taken on the differences a_j - a_J, and N_J = max(a_1^2, N_{J-1}).
    """
    a = [int(v) for v in a]
    if J < 2 or len(a) != J:
        raise ValueError("need J >= 2 and J exponents")
    if any(v == 0 for v in a) or len(set(a)) != J:
        raise ValueError("exponents must be distinct and nonzero")
    a1 = abs(a[0])
    if J == 2:
        return (1 + math.sqrt(2)) * math.sqrt(4 * abs(a[1]) + 2 * a1 + 2) * a1, 1
    prev, n_prev = bourgain_constant(J - 1, [v - a[-1] for v in a[:-1]])
    C = math.sqrt(6 * a1 + 4 * a1 * prev) + math.sqrt(4 * prev * a1)
    return C, max(a1 * a1, n_prev)


def _shared_batch(q: RecurrenceQuery, fs):
    lo, hi, reach = q.window()
    horizon = (q.J - 2) * h_count(q.N) if q.J >= 3 else 0
    return sample_batch(q.system, q.plan, min(lo, 1), max(hi, q.N + horizon), reach)


def bourgain_check(q: RecurrenceQuery, oversample: int = DEFAULT_OVERSAMPLE, refine: str = "parabolic",
                   batch=None, _retry: bool = True) -> CheckReport:
    """||A_N||_1 against the Bourgain-type bound, on one shared sample set."""
    J = q.J
    if J < 2:
        raise ValueError("Bourgain bounds need J >= 2")
    C, NJ = bourgain_constant(J, q.exponents)
    if q.N < NJ:
        raise ThresholdError(f"N = {q.N} is below the threshold N_J = {NJ}")
    fs, factors = normalize(q.fs, q.system)
    qn = RecurrenceQuery(tuple(fs), q.exponents, q.system, q.N, 1, q.plan)
    if batch is None:
        batch = _shared_batch(qn, fs)
    lhs = p_norm(np.abs(recurrence_rows(qn, batch)), 1)
    k = 1 if J == 2 else J - 1
    ww = ww_average(WWQuery(fs[0], q.system, k, q.N, 1, 0.5, 1, q.plan, oversample, refine), batch=batch)
    if J == 2:
        rhs = C * (1.0 / q.N + ww.value)
        rhs_up = C * (1.0 / q.N + ww.certified_upper)
    else:
        H = h_count(q.N)
        r = 1.0 / 2 ** (J - 2)
        rhs = C * (H ** -r + ww.value**r)
        rhs_up = C * (H ** -r + ww.certified_upper**r)
    report = make_report(
        "bourgain", q.system, lhs, rhs, C,
        seed=q.plan.seed,
        params={"J": J, "exponents": list(q.exponents), "N": q.N, "N_J": NJ, "samples": q.plan.count,
                "scale_factors": factors, "oversample": oversample},
        brackets={"ww_lower": ww.value, "ww_upper": ww.certified_upper, "rhs_upper": rhs_up},
        slack=rhs_up - rhs,
    )
    if not report.certified and _retry:
        return bourgain_check(q, 2 * oversample, refine, batch, _retry=False)
    return report


# ---------------------------------------------------------------- return times


def return_times_rows(sysX, x, fs, a, sysY, gs, b, N: int, batchY) -> np.ndarray:
    c = orbit_product(fs, a, sysX, batch_of(sysX, [x]), N)[0]
    y = orbit_product(gs, b, sysY, batchY, N)
    return (y * c[None, :]).mean(axis=1)


def _y_batch(sysY, gs, b, N, planY):
    ends = [k * n for k in b for n in (1, N)]
    spans = [coord_span(g) for g in gs]
    return sample_batch(sysY, planY, min(ends), max(ends), (min(s[0] for s in spans), max(s[1] for s in spans)))


def return_times_norm(sysX, x, fs, a, sysY, gs, b, N: int, planY: SamplePlan, batchY=None) -> float:
    """L^2(nu) norm over sampled y of (1/N) sum prod f_j(T^{a_j n} x) prod g_k(S^{b_k n} y)."""
    if not fs or not gs:
        raise ValueError("need J >= 1 and K >= 1")
    if batchY is None:
        batchY = _y_batch(sysY, gs, b, N, planY)
    return p_norm(np.abs(return_times_rows(sysX, x, fs, a, sysY, gs, b, N, batchY)), 2)


def rt_chain_check(sysX, x, fs, sysY, g1, g2, N: int, planY: SamplePlan,
                   oversample: int = DEFAULT_OVERSAMPLE, refine: str = "golden") -> CheckReport:
    """The K = 2 return-times chain with H = floor(sqrt N).

    ||A||^2 <= 2/(H+1) + 4/(H+1) sum_{h=1}^H [1/H + sup_t |(1/N) sum_n e(nt) prod_j F_{j,h}(T^{jn} x)|]
    with F_{j,h} = conj(f_j) f_j o T^{jh} and A built from f_j o T^{jn}, g_1 o S^n, g_2 o S^{2n}.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    J = len(fs)
    a = tuple(range(1, J + 1))
    fs, ffac = normalize(fs, sysX)
    gs, gfac = normalize([g1, g2], sysY)
    lhs = return_times_norm(sysX, x, fs, a, sysY, gs, (1, 2), N, planY) ** 2
    H = h_count(N)
    xb = batch_of(sysX, [x])
    n = np.arange(1, N + 1, dtype=np.int64)
    pairs = [(f, j * n) for f, j in zip(fs, a)] + [(f, j * (n + H)) for f, j in zip(fs, a)]
    ev = evaluator_for(sysX, xb, pairs)
    rows = []
    for h in range(1, H + 1):
        d = np.ones(N, dtype=np.complex128)
        for f, j in zip(fs, a):
            d *= np.conj(ev.values(f, j * n)[0]) * ev.values(f, j * (n + h))[0]
        rows.append(d)
    sb = sup_modulus_batch(np.array(rows), oversample, refine)
    lo = math.fsum(1.0 / H + float(s) for s in sb.lower)
    up = math.fsum(1.0 / H + float(s) for s in sb.upper)
    rhs = 2.0 / (H + 1) + 4.0 / (H + 1) * lo
    rhs_up = 2.0 / (H + 1) + 4.0 / (H + 1) * up
    return make_report(
        "rt_chain", f"{sysX.describe()} x {sysY.describe()}", lhs, rhs, 4.0 / (H + 1),
        seed=planY.seed,
        params={"J": J, "N": N, "H": H, "samples": planY.count, "scale_factors_f": ffac,
                "scale_factors_g": gfac},
        brackets={"sup_sum_lower": lo, "sup_sum_upper": up, "rhs_upper": rhs_up},
        slack=rhs_up - rhs,
    )


def rt_general_quantity(sysX, x, fs, K: int, N: int, oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """(1/H + H^{-(K-1)} sum_h sup_t |...|)^{2^{-(K-1)}} for general K, reported without a verdict."""
    import itertools

    from .observables import cube_product

    J = len(fs)
    fs, _ = normalize(fs, sysX)
    H = h_count(N)
    hs = list(itertools.product(range(1, H + 1), repeat=K - 1))
    xb = batch_of(sysX, [x])
    total = 0.0
    for h in hs:
        cubes = [cube_product(f, h, j) for f, j in zip(fs, range(1, J + 1))]
        d = orbit_product(cubes, tuple(range(1, J + 1)), sysX, xb, N)
        total += float(sup_modulus_batch(d, oversample, "parabolic").lower[0])
    return (1.0 / H + total / len(hs)) ** (2.0 ** -(K - 1))


# ---------------------------------------------------------------- classical


def _sup_norm_of_orbit(f, a, system, batch, N, p, oversample, refine, base=0):
    n = a * np.arange(1, N + 1, dtype=np.int64) + base
    v = evaluator_for(system, batch, [(f, n)]).values(f, n)
    sb = sup_modulus_batch(v, oversample, refine)
    return p_norm(sb.lower, p), p_norm(sb.upper, p)


def power_lemma_check(f, system, a: int, N: int, p: int = 2, plan: SamplePlan = SamplePlan(256),
                      oversample: int = DEFAULT_OVERSAMPLE, refine: str = "golden",
                      rel_tol: float = 1e-9) -> CheckReport:
    """||sup_t |avg e(nt) f o T^{an}|||_p <= |a| ||sup_t |avg e(nt) f o T^n|||_p.

    For a < 0 the right side is read at T^{-(N+1)} x, an equally valid
    sample of the same norm, which makes a = -1 an identity sample by sample.
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    base = -(N + 1) if a < 0 else 0
    lo_, hi_ = min(a, a * N, 1 + base), max(a, a * N, N)
    batch = sample_batch(system, plan, lo_, hi_, coord_span(f))
    l_lo, l_up = _sup_norm_of_orbit(f, a, system, batch, N, p, oversample, refine)
    r_lo, r_up = _sup_norm_of_orbit(f, 1, system, batch, N, p, oversample, refine, base)
    A = abs(a)
    return make_report(
        "power_lemma", system, l_up, A * r_lo, A,
        seed=plan.seed, params={"a": a, "N": N, "p": p, "rhs_offset": base},
        brackets={"lhs": [l_lo, l_up], "rhs": [A * r_lo, A * r_up]},
        slack=(l_up - l_lo) + A * (r_up - r_lo), abs_tol=1e-12, rel_tol=rel_tol,
    )


def maximal_check(f, system, Nmax: int, p: float = 2.0, plan: SamplePlan = SamplePlan(256),
                  rel_tol: float = 1e-9) -> CheckReport:
    """||max_{N <= Nmax} |(1/N) sum_{n=1}^N f o T^n|||_p <= p/(p-1) ||f||_p."""
    if not p > 1:
        raise ValueError("maximal inequality needs p > 1")
    batch = sample_batch(system, plan, 0, Nmax, coord_span(f))
    ev = evaluator_for(system, batch, [(f, [0, Nmax])])
    vals = ev.range_values(f, 0, Nmax + 1)
    if np.any(np.abs(vals.imag) > 1e-12):
        raise ValueError("maximal inequality needs a real-valued observable")
    vals = vals.real
    avgs = np.cumsum(vals[:, 1:], axis=1) / np.arange(1, Nmax + 1)
    mx = np.max(np.abs(avgs), axis=1)
    lhs = float(np.mean(mx**p) ** (1 / p))
    fnorm = float(np.mean(np.abs(vals[:, 0]) ** p) ** (1 / p))
    c = p / (p - 1)
    return make_report("maximal", system, lhs, c * fnorm, c, seed=plan.seed,
                       params={"Nmax": Nmax, "p": p, "samples": plan.count},
                       abs_tol=1e-12, rel_tol=rel_tol)


def holder_check(a, p: float, q: float, rel_tol: float = 1e-9) -> CheckReport:
    """(mean |a|^p)^{1/p} <= (mean |a|^q)^{1/q} for p < q."""
    if not 0 < p < q:
        raise ValueError("need 0 < p < q")
    x = np.abs(np.asarray(a, dtype=np.float64))
    lhs = float(np.mean(x**p) ** (1 / p))
    rhs = float(np.mean(x**q) ** (1 / q))
    return make_report("holder_avg", "sequence", lhs, rhs, 1.0, params={"p": p, "q": q, "n": len(x)},
                       abs_tol=1e-12, rel_tol=rel_tol)


CLASSICAL = {"power_lemma": power_lemma_check, "maximal": maximal_check, "holder_avg": holder_check}


def classical_inequality_check(kind: str, **args) -> CheckReport:
    if kind not in CLASSICAL:
        raise ValueError(f"kind must be one of {sorted(CLASSICAL)}")
    return CLASSICAL[kind](**args)
