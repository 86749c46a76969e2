"""Power-law fits of decay series."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DecayFit:
    """value ~ exp(intercept) * N^(-slope)."""

    slope: float
    intercept: float
    r2: float
    points: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2, "points": self.points}


def fit_decay(series) -> DecayFit:
    """Least squares of log(value) on log(N) over entries with value > 0."""
    pts = [(float(N), float(v)) for N, v in series if v > 0 and math.isfinite(v)]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 positive points, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (b, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (b * x + c)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    # a flat series is fitted exactly by a zero slope
    r2 = 1.0 if ss_tot <= 1e-30 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    slope = -float(b)
    return DecayFit(slope=0.0 if abs(slope) < 1e-14 else slope, intercept=float(c), r2=r2, points=len(pts))
