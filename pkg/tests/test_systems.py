import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wwlab.errors import WindowError
from wwlab.systems import (
    Bernoulli,
    MASK,
    Product,
    Rotation,
    Skew,
    SymbolWord,
    TorusPoint,
    binom,
    binomial_rows,
    faulhaber_poly,
    from_raw,
    iterate,
    step,
    to_raw,
)

GOLDEN = (math.sqrt(5) - 1) / 2


def naive_P(j, n):
    if j == 1:
        return n
    return sum(naive_P(j - 1, m) for m in range(n))


@pytest.mark.parametrize("j,n,want", [(2, 1, 0), (2, 3, 3), (3, 3, 1)])
def test_faulhaber_examples(j, n, want):
    assert faulhaber_poly(j, n) == want


@pytest.mark.parametrize("j", [2, 3, 4, 5])
def test_faulhaber_matches_nested_sums(j):
    for n in range(0, 20):
        assert faulhaber_poly(j, n) == naive_P(j, n)


@pytest.mark.parametrize("j", [2, 3, 4])
def test_faulhaber_leading_coefficient(j):
    n = 10**6
    ratio = Fraction(faulhaber_poly(j, n), n**j)
    assert abs(float(ratio) - 1 / math.factorial(j)) < 1e-5 / math.factorial(j)


def test_faulhaber_rejects_bad_input():
    with pytest.raises(ValueError):
        faulhaber_poly(1, 3)
    with pytest.raises(ValueError):
        faulhaber_poly(2, -1)


def test_faulhaber_large_inputs_stay_exact():
    n = 10**30
    assert faulhaber_poly(2, n) == n * (n - 1) // 2


@given(st.integers(-50, 50), st.integers(0, 6))
def test_generalized_binomial_pascal(n, j):
    if j >= 1:
        assert binom(n + 1, j) == binom(n, j) + binom(n, j - 1)


@given(st.integers(-300, 300), st.integers(0, 200), st.integers(0, 5))
def test_binomial_rows_match_exact(lo, width, depth):
    rows = binomial_rows(lo, lo + width, depth)
    for j in range(depth + 1):
        for i in (0, width // 2, width):
            assert int(rows[j, i]) == binom(lo + i, j) & MASK


def test_torus_point_coordinates_in_unit_interval():
    p = TorusPoint.of([1.25, -0.25, 1 - 1e-17])
    assert p.coords == (0.25, 0.75, 0.0)
    assert all(0 <= c < 1 for c in p.coords)


def test_snap_near_one():
    assert to_raw(1.0 - 1e-16) == 0
    assert from_raw(MASK) == 0.0


def test_skew2_half_angle_example():
    y = iterate(Skew(2, 0.5), TorusPoint.of([0, 0]), 2)
    assert y.coords == (0.0, 0.5)


def test_skew3_third_angle_example():
    y = iterate(Skew(3, 1 / 3), TorusPoint.of([0, 0, 0]), 3)
    assert y.coords[0] == pytest.approx(0.0, abs=1e-12) or y.coords[0] == pytest.approx(1.0, abs=1e-12)
    assert min(y.coords[1], 1 - y.coords[1]) < 1e-12
    assert y.coords[2] == pytest.approx(1 / 3, abs=1e-12)


@pytest.mark.parametrize("system", [Rotation(GOLDEN), Skew(2, GOLDEN), Skew(4, math.sqrt(2) - 1)])
def test_iterate_zero_is_identity(system):
    x = TorusPoint.of([0.1 * (i + 1) for i in range(getattr(system, "dim", 1))])
    assert iterate(system, x, 0) == x


@given(st.integers(0, 500), st.integers(0, 500), st.lists(st.floats(0, 1, exclude_max=True), min_size=3, max_size=3))
def test_iterate_semigroup_exact(m, n, coords):
    s = Skew(3, GOLDEN)
    x = TorusPoint.of(coords)
    assert iterate(s, x, m + n) == iterate(s, iterate(s, x, m), n)


@given(st.integers(-200, 200), st.lists(st.floats(0, 1, exclude_max=True), min_size=2, max_size=2))
def test_negative_iterate_inverts(n, coords):
    s = Skew(2, GOLDEN)
    x = TorusPoint.of(coords)
    assert iterate(s, iterate(s, x, n), -n) == x


@pytest.mark.parametrize("d", [2, 3, 4])
def test_orbit_of_origin_is_P_alpha(d):
    s = Skew(d, GOLDEN)
    a = to_raw(GOLDEN)
    x = TorusPoint.of([0] * d)
    y = x
    for n in range(1, 65):
        y = step(s, y)
        closed = iterate(s, x, n)
        assert closed == y
        for i in range(d):
            Pi = n if i == 0 else faulhaber_poly(i + 1, n)
            assert closed.raw[i] == (Pi * a) & MASK


def test_bernoulli_probs_validated():
    with pytest.raises(ValueError):
        Bernoulli((0.5, 0.4))
    Bernoulli((0.5, 0.5 + 5e-13))


def test_bernoulli_window_error():
    w = SymbolWord(np.array([0, 1, 1, 0]), origin=1)
    b = Bernoulli((0.5, 0.5))
    assert iterate(b, w, 2).coord(0) == 0
    assert iterate(b, w, 2).coord(-1) == 1
    with pytest.raises(WindowError):
        iterate(b, w, 3)
    with pytest.raises(WindowError):
        w.coord(3)


def test_product_iterates_componentwise():
    s = Product(Rotation(GOLDEN), Bernoulli((0.5, 0.5)))
    x = (TorusPoint.of([0.2]), SymbolWord(np.arange(6) % 2, 0))
    y = iterate(s, x, 3)
    assert y[0] == iterate(s.left, x[0], 3)
    assert y[1].origin == 3


def test_point_kind_mismatch_rejected():
    with pytest.raises(TypeError):
        iterate(Skew(2, GOLDEN), TorusPoint.of([0.1]), 1)
    with pytest.raises(TypeError):
        iterate(Bernoulli((0.5, 0.5)), TorusPoint.of([0.1]), 1)


@pytest.mark.parametrize("angle", [0.0, 1.0, -0.2])
def test_angle_range(angle):
    with pytest.raises(ValueError):
        Rotation(angle)
