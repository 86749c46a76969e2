import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wwlab.fit import fit_decay

Ns = [2**i for i in range(6, 15)]


def test_exact_power_law():
    fit = fit_decay([(N, N**-0.5) for N in Ns])
    assert fit.slope == pytest.approx(0.5, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_constant_series():
    fit = fit_decay([(N, 0.3) for N in Ns])
    assert fit.slope == 0 and fit.r2 == 1


def test_intercept():
    fit = fit_decay([(N, 2 * N ** (-1 / 6)) for N in Ns])
    assert fit.slope == pytest.approx(1 / 6, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(2), abs=1e-12)


def test_nonpositive_entries_dropped():
    fit = fit_decay([(1, 0.0), (2, -1.0)] + [(N, N**-1.0) for N in (4, 8, 16)])
    assert fit.points == 3 and fit.slope == pytest.approx(1.0)


def test_needs_three_points():
    with pytest.raises(ValueError):
        fit_decay([(4, 1.0), (8, 0.5), (16, 0.0)])


@given(st.floats(1e-6, 1e6), st.lists(st.floats(0.5, 2.0), min_size=4, max_size=4))
def test_rescaling_invariance(c, noise):
    series = [(N, N**-0.3 * z) for N, z in zip((16, 64, 256, 1024), noise)]
    a = fit_decay(series)
    b = fit_decay([(N, c * v) for N, v in series])
    assert b.slope == pytest.approx(a.slope, abs=1e-9)
    assert b.intercept == pytest.approx(a.intercept + math.log(c), abs=1e-9)
    assert 0 <= a.r2 <= 1
