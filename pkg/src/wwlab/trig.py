"""Certified maximization of |(1/N) sum_{n=1}^N u_n e(nt)| over t.

The modulus is sampled on M = oversample * N equispaced points with one FFT.
The grid maximum is a lower bound. Three upper bounds are available:

* trivial: (1/N) sum |u_n|;
* Lipschitz: grid max + L / (2M), with L the derivative bound of the
  polynomial after centering its frequencies;
* Bernstein: g = |S|^2 is a real trigonometric polynomial of degree N-1, and
  at its maximizer g' = 0, so g* <= grid max^2 + (1/2) ||g''|| (1/(2M))^2 with
  ||g''|| <= (2 pi (N-1))^2 g*. Hence g* <= grid max^2 / kappa where
  kappa = 1 - pi^2 (N-1)^2 / (2 M^2).

The smallest valid bound is reported. A local search around the grid argmax
raises the lower bound. Optionally the upper bound is tightened cell by cell:
on a cell of width d the same argument gives g <= max(endpoint values) +
(1/2) ||g''|| (d/2)^2, so only cells whose bound exceeds lower^2 need to be
subdivided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

DEFAULT_OVERSAMPLE = 8
GOLDEN_STEPS = 24
SUBDIVIDE = 8
MAX_CANDIDATES = 1 << 16
REFINE_MODES = ("none", "parabolic", "golden")
_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True, eq=False)
class WeightedSeq:
    """Coefficients u_1, ..., u_N."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128).copy()
        if v.ndim != 1 or len(v) < 1:
            raise ValueError("a weighted sequence needs at least one entry")
        if not np.all(np.isfinite(v)):
            raise ValueError("weighted sequence entries must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SupEstimate:
    lower: float
    upper: float
    argmax_t: float
    grid_size: int

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True, eq=False)
class SupBatch:
    """Row-wise brackets for a stack of sequences."""

    lower: np.ndarray
    upper: np.ndarray
    argmax_t: np.ndarray
    grid_size: int

    def __len__(self):
        return len(self.lower)

    def __getitem__(self, i) -> SupEstimate:
        return SupEstimate(float(self.lower[i]), float(self.upper[i]), float(self.argmax_t[i]), self.grid_size)


def lipschitz_constant(u) -> float:
    """(2 pi / N) sum n |u_n|, a bound on the t-derivative of S."""
    u = np.asarray(u)
    n = np.arange(1, len(u) + 1)
    return 2 * math.pi / len(u) * float(np.sum(n * np.abs(u)))


def modulus_at(U: np.ndarray, t: np.ndarray) -> np.ndarray:
    """|(1/N) sum_n U[s, n-1] e(n t_s)| for each row s."""
    S, N = U.shape
    z = np.exp(2j * math.pi * (t - np.floor(t)))
    powers = np.cumprod(np.broadcast_to(z[:, None], (S, N)), axis=1)
    return np.abs(np.einsum("sn,sn->s", U, powers)) / N


def _golden(U, a, b, steps, best, best_t):
    r = (math.sqrt(5) - 1) / 2
    c = b - r * (b - a)
    d = a + r * (b - a)
    fc = modulus_at(U, c)
    fd = modulus_at(U, d)
    for _ in range(steps):
        keep_left = fc >= fd
        # maximize: drop the side beyond the smaller interior value
        b = np.where(keep_left, d, b)
        a = np.where(keep_left, a, c)
        new_c = b - r * (b - a)
        new_d = a + r * (b - a)
        c, d = np.where(keep_left, new_c, d), np.where(keep_left, c, new_d)
        fnew = modulus_at(U, np.where(keep_left, c, d))
        fc, fd = np.where(keep_left, fnew, fd), np.where(keep_left, fc, fnew)
        for f, t in ((fc, c), (fd, d)):
            better = f > best
            best = np.where(better, f, best)
            best_t = np.where(better, t, best_t)
    return best, best_t


def _tighten(U, grid_at, M, lower, upper, slack):
    """Subdivide the cells that may still hold a value above ``lower``."""
    S, N = U.shape
    if N < 2:
        return upper
    G = grid_at(np.broadcast_to(np.arange(M), (S, M)).T).T  # (S, M)
    curv = 0.5 * (2 * math.pi * (N - 1)) ** 2 * upper**2
    pair = np.maximum(G, np.roll(G, -1, axis=1)) + slack[:, None]
    bound = pair**2 + (curv / (4.0 * M * M))[:, None]
    cand = bound > (lower**2)[:, None]
    rows, cells = np.nonzero(cand)
    if len(rows) == 0 or len(rows) > MAX_CANDIDATES:
        return upper
    best = np.max(np.where(cand, 0.0, bound), axis=1)
    # direct sums accumulate rounding linearly in N
    slack = slack + 4 * N * _EPS * np.abs(U).sum(axis=1) / N
    r = SUBDIVIDE
    fine = curv / (4.0 * (r * M) ** 2)
    chunk = max(1, (1 << 21) // N)
    for a in range(0, len(rows), chunk):
        rr, cc = rows[a : a + chunk], cells[a : a + chunk]
        vals = np.stack([modulus_at(U[rr], (cc + j / r) / M) for j in range(r + 1)], axis=1)
        sub = np.maximum(vals[:, :-1], vals[:, 1:]) + slack[rr, None]
        cell_max = (sub**2).max(axis=1) + fine[rr]
        np.maximum.at(best, rr, cell_max)
    return np.minimum(upper, np.sqrt(best))


def sup_modulus_batch(U, oversample: int = DEFAULT_OVERSAMPLE, refine: str = "golden",
                      steps: int = GOLDEN_STEPS, tighten: bool = False) -> SupBatch:
    """Certified brackets for every row of U (shape (S, N)).

    ``tighten`` subdivides candidate cells to shrink ``upper``.
    """
    U = np.atleast_2d(np.asarray(U, dtype=np.complex128))
    if U.shape[1] < 1:
        raise ValueError("sequences must have length >= 1")
    if oversample < 2:
        raise ValueError(f"oversample must be >= 2, got {oversample}")
    if refine not in REFINE_MODES:
        raise ValueError(f"refine must be one of {REFINE_MODES}")
    S, N = U.shape
    M = int(oversample) * N
    rows = np.arange(S)
    if not np.any(U.imag):
        # real coefficients: |S(t)| = |S(-t)|, so half the grid suffices
        G = np.abs(scipy.fft.rfft(U.real, n=M, axis=1, workers=1)) / N

        def at(idx):
            idx = idx % M
            return G[rows, np.where(idx > M // 2, M - idx, idx)]
    else:
        G = np.abs(scipy.fft.fft(np.conj(U), n=M, axis=1, workers=1)) / N

        def at(idx):
            return G[rows, idx % M]
    k = np.argmax(G, axis=1)
    grid = G[rows, k]

    absu = np.abs(U)
    trivial = absu.sum(axis=1) / N
    n = np.arange(1, N + 1)
    L = 2 * math.pi / N * (absu @ np.abs(n - (N + 1) / 2))
    slack = 8 * _EPS * math.log2(M) * trivial
    gmax = grid + slack
    upper = np.minimum(trivial, gmax + L / (2 * M))
    kappa = 1.0 - (math.pi * (N - 1)) ** 2 / (2.0 * M * M)
    if kappa > 0:
        upper = np.minimum(upper, gmax / math.sqrt(kappa))

    lower = grid.copy()
    t = k / M
    if refine != "none" and N > 1:
        gl = at(k - 1)
        gr = at(k + 1)
        den = gl - 2 * grid + gr
        with np.errstate(divide="ignore", invalid="ignore"):
            shift = np.where(den < 0, 0.5 * (gl - gr) / den, 0.0)
        shift = np.clip(np.nan_to_num(shift), -0.5, 0.5)
        tp = (k + shift) / M
        fp = modulus_at(U, tp)
        better = fp > lower
        lower = np.where(better, fp, lower)
        t = np.where(better, tp, t)
        if refine == "golden" and steps > 0:
            lower, t = _golden(U, k / M - 1.0 / M, k / M + 1.0 / M, steps, lower, t)
    if tighten:
        upper = _tighten(U, at, M, lower, upper, slack)
    upper = np.maximum(upper, lower)
    return SupBatch(lower, upper, np.mod(t, 1.0), M)


def sup_modulus(u, oversample: int = DEFAULT_OVERSAMPLE, refine: str = "golden",
                steps: int = GOLDEN_STEPS, tighten: bool = True) -> SupEstimate:
    """Certified bracket for sup_t |(1/N) sum_{n=1}^N u_n e(nt)|."""
    if not isinstance(u, WeightedSeq):
        u = WeightedSeq(u)
    return sup_modulus_batch(u.values[None, :], oversample, refine, steps, tighten)[0]


# ---------------------------------------------------------------- Van der Corput


VDC_MODES = ("averaged", "summed", "sup_averaged")


def autocorrelations(v: np.ndarray) -> np.ndarray:
    """r_h = sum_{n=0}^{N-h-1} conj(v_{n+h}) v_n for h = 0..N-1."""
    N = len(v)
    c = np.correlate(v, v, mode="full")  # c[N-1+h] = sum v_{n+h} conj(v_n)
    return np.conj(c[N - 1 :])


def vdc_bound(v, H: int = 0, mode: str = "averaged", oversample: int = 32) -> tuple[float, float]:
    """Both sides of a Van der Corput inequality for the sequence v.

    ``averaged``: |(1/N) sum v|^2 against the weighted autocorrelation sum.
    ``sup_averaged``: sup_t |(1/N) sum u_n e(nt)|^2
        <= 2/(N(H+1)) sum |u|^2 + 4/(H+1) sum_{h=1}^H |(1/N) r_h|.
    ``summed``: sup_t |sum u_n e(nt)|^2 <= 2 sum |u|^2 + 4 sum_{h=1}^{N-1} |r_h|.
    Sup variants use the certified upper bound on the left.
    """
    if mode not in VDC_MODES:
        raise ValueError(f"mode must be one of {VDC_MODES}")
    if not isinstance(v, WeightedSeq):
        v = WeightedSeq(v)
    x = v.values
    N = v.N
    if mode != "summed" and not 0 <= H <= N - 1:
        raise ValueError(f"H must lie in [0, {N - 1}], got {H}")
    r = autocorrelations(x)
    energy = float(np.sum(np.abs(x) ** 2))
    if mode == "averaged":
        lhs = abs(np.sum(x) / N) ** 2
        h = np.arange(1, H + 1)
        cross = float(np.sum((H + 1 - h) * r[1 : H + 1].real))
        rhs = (N + H) / (N * N * (H + 1)) * energy + 2 * (N + H) / (N * N * (H + 1) ** 2) * cross
        return float(lhs), float(rhs)
    sup = sup_modulus(v, oversample=oversample).upper
    if mode == "sup_averaged":
        rhs = 2 / (N * (H + 1)) * energy + 4 / (H + 1) * float(np.sum(np.abs(r[1 : H + 1]))) / N
        return sup**2, float(rhs)
    rhs = 2 * energy + 4 * float(np.sum(np.abs(r[1:])))
    return (N * sup) ** 2, float(rhs)
