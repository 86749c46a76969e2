import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from wwlab.trig import (
    WeightedSeq,
    autocorrelations,
    lipschitz_constant,
    modulus_at,
    sup_modulus,
    sup_modulus_batch,
    vdc_bound,
)

complex_vectors = hnp.arrays(
    np.complex128,
    st.integers(1, 80),
    elements=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
)


def reference_max(u, M):
    N = len(u)
    t = np.arange(M) / M
    n = np.arange(1, N + 1)
    return float(np.max(np.abs(np.exp(2j * np.pi * np.outer(t, n)) @ u)) / N)


def test_constant_sequence_peaks_at_zero():
    est = sup_modulus(np.ones(32))
    assert est.lower == pytest.approx(1.0, abs=1e-14)
    assert est.upper == pytest.approx(1.0, abs=1e-12)
    assert est.argmax_t == 0.0


def test_modulated_sequence_peaks_at_frequency():
    n = np.arange(1, 101)
    est = sup_modulus(np.exp(-2j * np.pi * n * 0.3), oversample=10)
    assert est.lower == pytest.approx(1.0, abs=1e-12)
    assert est.argmax_t == pytest.approx(0.3, abs=1e-12)


def test_random_bracket_contains_dense_grid_max(rng):
    u = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    est = sup_modulus(u)
    ref = reference_max(u, 4096)
    assert ref <= est.upper
    assert est.lower <= ref + 1e-3 * ref  # grid of 4096 may miss the true peak slightly


@given(complex_vectors)
def test_bracket_is_ordered_and_valid(u):
    est = sup_modulus(u, oversample=4)
    assert 0 <= est.lower <= est.upper
    assert reference_max(u, 64 * len(u)) <= est.upper * (1 + 1e-12) + 1e-15
    assert 0 <= est.argmax_t < 1


@given(complex_vectors)
def test_width_below_lipschitz_half_spacing(u):
    for ov in (2, 8):
        est = sup_modulus(u, oversample=ov, refine="none")
        M = ov * len(u)
        assert est.width <= lipschitz_constant(u) / (2 * M) + 1e-12 * (1 + np.abs(u).sum())


@given(complex_vectors, st.floats(-3, 3, allow_nan=False).filter(lambda c: c != 0))
def test_real_scaling_is_exact(u, c):
    a = sup_modulus(u, refine="none")
    b = sup_modulus(c * u, refine="none")
    assert b.lower == pytest.approx(abs(c) * a.lower, rel=1e-12, abs=1e-300)


@given(complex_vectors)
def test_tightened_upper_is_valid_and_tighter(u):
    loose = sup_modulus(u, oversample=4, tighten=False)
    tight = sup_modulus(u, oversample=4, tighten=True)
    assert tight.lower == loose.lower
    assert tight.lower <= tight.upper <= loose.upper
    assert reference_max(u, 256 * len(u)) <= tight.upper * (1 + 1e-12) + 1e-15


def test_tightening_reaches_one_percent(rng):
    for N in (16, 64, 256):
        u = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        est = sup_modulus(u)
        assert est.width < 1e-2 * est.upper
        assert sup_modulus(u, tighten=False).width > est.width


def test_modulation_invariance_within_bracket(rng):
    u = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    beta = 0.123456
    v = u * np.exp(2j * np.pi * np.arange(1, 129) * beta)
    a, b = sup_modulus(u), sup_modulus(v)
    assert b.lower <= a.upper + 1e-12 and a.lower <= b.upper + 1e-12


def test_batch_matches_single(rng):
    U = rng.standard_normal((5, 40)) + 1j * rng.standard_normal((5, 40))
    for tighten in (False, True):
        batch = sup_modulus_batch(U, 8, "golden", tighten=tighten)
        for i in range(5):
            assert batch[i] == sup_modulus(U[i], 8, "golden", tighten=tighten)


def test_real_path_matches_complex_path(rng):
    u = rng.standard_normal((3, 50))
    real = sup_modulus_batch(u, 8, "none")
    # a tiny imaginary perturbation forces the complex transform
    cplx = sup_modulus_batch(u + 1e-300j, 8, "none")
    assert np.allclose(real.lower, cplx.lower, rtol=1e-13)


def test_modulus_at_direct(rng):
    U = rng.standard_normal((2, 7)) + 0j
    t = np.array([0.1, 0.77])
    n = np.arange(1, 8)
    want = [abs(np.sum(U[i] * np.exp(2j * np.pi * n * t[i]))) / 7 for i in range(2)]
    assert np.allclose(modulus_at(U, t), want)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        WeightedSeq([])
    with pytest.raises(ValueError):
        WeightedSeq([1.0, np.nan])
    with pytest.raises(ValueError):
        sup_modulus([1.0, 2.0], oversample=1)


# ---------------------------------------------------------------- Van der Corput


def test_vdc_examples():
    assert vdc_bound(np.ones(5), 0, "averaged") == pytest.approx((1.0, 1.0))
    assert vdc_bound(np.ones(2), 1, "averaged") == pytest.approx((1.0, 1.125))


def test_autocorrelations_direct(rng):
    v = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    r = autocorrelations(v)
    for h in range(9):
        assert r[h] == pytest.approx(sum(np.conj(v[n + h]) * v[n] for n in range(9 - h)))


def test_vdc_h_range():
    with pytest.raises(ValueError):
        vdc_bound(np.ones(4), 4, "averaged")
    with pytest.raises(ValueError):
        vdc_bound(np.ones(4), 0, "mystery")


@given(complex_vectors, st.data())
def test_vdc_inequalities_hold(v, data):
    N = len(v)
    H = data.draw(st.integers(0, N - 1))
    for mode in ("averaged", "sup_averaged", "summed"):
        lhs, rhs = vdc_bound(v, H, mode, oversample=8)
        assert lhs <= rhs * (1 + 1e-9) + 1e-300
