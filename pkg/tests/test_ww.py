import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wwlab.errors import BudgetError
from wwlab.evaluation import eval_obs
from wwlab.fit import fit_decay
from wwlab.observables import CenteredCoordinate, Const, TorusCharacter, conj, shift
from wwlab.sampling import SamplePlan, sample_batch
from wwlab.systems import Bernoulli, Rotation, Skew, SymbolWord, TorusPoint, step
from wwlab.ww import WWQuery, h_count, orbit_weights, uww_pointwise, ww_average, ww_norm_term

GOLDEN = (math.sqrt(5) - 1) / 2
COIN = Bernoulli((0.5, 0.5))
C0 = CenteredCoordinate(0, 0.5)


def brute_sup(values, grid=1024):
    N = len(values)
    t = np.arange(grid) / grid
    n = np.arange(1, N + 1)
    return float(np.max(np.abs(np.exp(2j * np.pi * np.outer(t, n)) @ values)) / N)


@pytest.mark.parametrize("N,beta,want", [(16, 0.5, 4), (17, 0.5, 4), (15, 0.5, 3), (1000, 1 / 3, 10), (999, 1 / 3, 9),
                                         (10**12, 0.5, 10**6), (7, 1.0, 7)])
def test_h_count_exact(N, beta, want):
    assert h_count(N, beta) == want


def test_orbit_weights_examples():
    assert np.all(orbit_weights(Const(0.0), Rotation(GOLDEN), TorusPoint.of([0.3]), 8).values == 0)
    v = orbit_weights(TorusCharacter((1,)), Rotation(GOLDEN), TorusPoint.of([0]), 20).values
    n = np.arange(1, 21)
    assert np.allclose(v, np.exp(2j * np.pi * n * GOLDEN), atol=1e-12)
    w = orbit_weights(TorusCharacter((0, 1)), Skew(2, 0.5), TorusPoint.of([0, 0]), 4).values
    assert np.allclose(w, [1, -1, -1, 1], atol=1e-12)


@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=3, max_size=3))
@settings(max_examples=20)
def test_orbit_weights_match_stepwise_iteration(coords):
    s = Skew(3, math.sqrt(2) - 1)
    x = TorusPoint.of(coords)
    f = TorusCharacter((2, -1, 1))
    v = orbit_weights(f, s, x, 30).values
    y = x
    for n in range(30):
        y = step(s, y)
        assert abs(v[n] - eval_obs(f, s, y)) < 1e-9


def test_ww_norm_term_trivial():
    plan = SamplePlan(8, 1)
    lo, up = ww_norm_term(Const(1.0), Rotation(GOLDEN), (3,), 32, 2, plan)
    assert lo == pytest.approx(1.0) and up == pytest.approx(1.0)
    assert ww_norm_term(Const(0.0), Rotation(GOLDEN), (3,), 32, 2, plan) == (0.0, 0.0)


def test_ww_norm_term_matches_brute_force_bernoulli():
    N, h, plan = 16, 1, SamplePlan(64, 3)
    batch = sample_batch(COIN, plan, 1, N + h, (0, 0))
    lo, up = ww_norm_term(C0, COIN, (h,), N, 2, plan, batch=batch)
    sups = []
    for i in range(len(batch)):
        w = batch.point(i)
        vals = np.array([(w.coord(n) - 0.5) * (w.coord(n + h) - 0.5) for n in range(1, N + 1)], dtype=complex)
        sups.append(brute_sup(vals))
    ref = math.sqrt(np.mean(np.square(sups)))
    assert lo - 1e-12 <= ref * (1 + 1e-3) and ref <= up + 1e-12


def test_p_monotone_on_shared_samples():
    plan = SamplePlan(64, 9)
    f = TorusCharacter((0, 0, 1))
    s = Skew(3, GOLDEN)
    batch = sample_batch(s, plan, 1, 64 + 5)
    l1, _ = ww_norm_term(f, s, (5,), 64, 1, plan, batch=batch)
    l2, _ = ww_norm_term(f, s, (5,), 64, 2, plan, batch=batch)
    assert l1 <= l2 + 1e-15


@pytest.mark.parametrize("k", [1, 2, 3])
def test_constant_one_gives_one(k):
    r = ww_average(WWQuery(Const(1.0), Rotation(GOLDEN), k, 16, plan=SamplePlan(4)))
    assert r.value == pytest.approx(1.0, abs=1e-12)
    assert r.certified_upper == pytest.approx(1.0, abs=1e-9)


def test_zero_gives_zero():
    r = ww_average(WWQuery(Const(0.0), Skew(2, GOLDEN), 2, 64, plan=SamplePlan(4)))
    assert r.value == 0 and r.certified_upper == 0


@pytest.mark.parametrize("N", [64, 256, 1000])
def test_rotation_first_order_is_one(N):
    q = WWQuery(TorusCharacter((1,)), Rotation(GOLDEN), 1, N, plan=SamplePlan(8, 2), refine="golden")
    r = ww_average(q)
    assert abs(r.value - 1) < 1e-6
    assert r.value <= r.certified_upper <= 1 + 1e-9


def test_result_invariants():
    q = WWQuery(TorusCharacter((0, 0, 1)), Skew(3, GOLDEN), 2, 256, plan=SamplePlan(16, 4))
    r = ww_average(q)
    assert 0 <= r.value <= r.certified_upper <= 1 + 1e-12
    assert r.H == 16 and len(r.per_h) == 16


def test_exponent_flag():
    f = TorusCharacter((0, 0, 1))
    s = Skew(3, GOLDEN)
    flat = ww_average(WWQuery(f, s, 2, 64, plan=SamplePlan(8), exponent=1.0))
    manual = np.mean([lo for _, lo, _ in flat.per_h])
    assert flat.value == pytest.approx(manual, rel=1e-14)


@pytest.mark.parametrize("k", [1, 2])
def test_scale_invariance(k):
    f = TorusCharacter((0, 1, 1))
    s = Skew(3, GOLDEN)
    c = 0.37
    a = ww_average(WWQuery(f, s, k, 64, plan=SamplePlan(16, 1)))
    b = ww_average(WWQuery(c * f, s, k, 64, plan=SamplePlan(16, 1)))
    assert b.value == pytest.approx(c ** (2 ** (k - 1) * 2 / 3) * a.value, rel=1e-12)


def test_multilinearity_bound_k2():
    s = Skew(3, GOLDEN)
    f = TorusCharacter((0, 0, 1))
    g = 0.5 * TorusCharacter((0, 1, 1))
    plan = SamplePlan(32, 6)
    for N in (64, 256):
        total = ww_average(WWQuery(f + g, s, 2, N, plan=plan)).value
        bound = 0.0
        for pair in itertools.product((f, g), repeat=2):
            bound += ww_average(WWQuery(pair, s, 2, N, plan=plan)).certified_upper
        assert total <= bound + 1e-12


def test_workers_do_not_change_results():
    q1 = WWQuery(C0, COIN, 2, 256, plan=SamplePlan(32, 5))
    q8 = WWQuery(C0, COIN, 2, 256, plan=SamplePlan(32, 5), workers=8)
    assert ww_average(q1) == ww_average(q8)


def test_query_validation():
    with pytest.raises(ValueError):
        WWQuery(C0, COIN, 0)
    with pytest.raises(ValueError):
        WWQuery(C0, COIN, 2, N=3)
    with pytest.raises(ValueError):
        WWQuery(C0, COIN, 2, p=3)
    with pytest.raises(ValueError):
        WWQuery((C0, C0, C0), COIN, 2)


def test_order_reduction_sign():
    plan = SamplePlan(32, 8)
    slopes = []
    for k in (1, 2):
        series = [(N, ww_average(WWQuery(C0, COIN, k, N, plan=plan, oversample=4)).value) for N in (64, 128, 256, 512)]
        slopes.append(fit_decay(series).slope)
    if slopes[1] >= 0:
        assert slopes[0] >= 0


# ---------------------------------------------------------------- uniform probe


def test_uww_zero_and_rotation():
    s = Rotation(GOLDEN)
    x = TorusPoint.of([0.4])
    assert uww_pointwise([Const(0.0)] * 2, s, x, 16) == (0.0, 0.0)
    lo, up = uww_pointwise(TorusCharacter((1,)), s, x, 16, k=2)
    assert lo == pytest.approx(1.0, abs=1e-9) and up >= lo


def test_uww_matches_brute_force_bernoulli():
    N = 16
    w = sample_batch(COIN, SamplePlan(1, 12), -1, 2 * N + 1).point(0)
    lo, up = uww_pointwise(C0, COIN, w, N, k=2)
    ref = 0.0
    for h in range(1, N + 1):
        vals = np.array([(w.coord(n) - 0.5) * (w.coord(n + h) - 0.5) for n in range(1, N + 1)], dtype=complex)
        ref += brute_sup(vals) ** 2
    ref /= N
    assert lo * (1 - 1e-3) <= ref <= up + 1e-12


def test_uww_budget():
    with pytest.raises(BudgetError):
        uww_pointwise(C0, COIN, SymbolWord(np.zeros(10)), 300, k=3)
    with pytest.raises(ValueError):
        uww_pointwise(C0, COIN, SymbolWord(np.zeros(10)), 8)
