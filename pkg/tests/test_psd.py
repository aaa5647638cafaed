import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import raised_cosine_autocorr, raised_cosine_psd
from pilotbounds.psd import (
    FadingPsd,
    PsdKind,
    autocorrelation,
    autocorrelation_sequence,
    circulant_equivalent,
    periodic_psd,
    psd_value,
    toeplitz_correlation,
    weak_norm_gap,
)
from pilotbounds.quadrature import freq_integral

RECT = FadingPsd.rectangular(0.05)
RC = FadingPsd.raised_cosine(0.1, 0.5)


def test_rectangular_values():
    assert psd_value(RECT, 0.0) == pytest.approx(10.0, rel=1e-15)
    assert psd_value(RECT, 0.2) == 0.0
    assert psd_value(RECT, -0.05) == pytest.approx(10.0)


def test_scalar_and_array_paths_agree():
    f = np.linspace(-0.5, 0.5, 1001)
    for m in (RECT, RC, FadingPsd.raised_cosine(0.2, 1.0, 2.5)):
        vec = psd_value(m, f)
        assert np.array_equal(vec, np.array([psd_value(m, float(x)) for x in f]))


def test_raised_cosine_matches_independent_formula():
    for m, beta in ((RC, 0.5), (FadingPsd.raised_cosine(0.05, 0.2, 3.0), 0.2)):
        for f in np.linspace(-0.5, 0.5, 777):
            ref = raised_cosine_psd(f, m.f_d, beta, m.sigma_h_sq)
            assert psd_value(m, float(f)) == pytest.approx(ref, rel=1e-13, abs=1e-15)


def test_unit_power_normalization():
    m = FadingPsd.raised_cosine(0.05, 0.5)
    assert freq_integral(lambda f: psd_value(m, f), m.breakpoints) == pytest.approx(1.0, abs=1e-10)


# the flat spectrum jumps at f_d, so its Riemann sum is exact only when the
# edge falls between grid points; 0.0625 * 2^16 is an integer
@pytest.mark.parametrize("model", [FadingPsd.rectangular(0.0625), RC, FadingPsd.raised_cosine(0.03, 0.9, 2.0)])
def test_parseval_on_fine_grid(model):
    n = 2 ** 16
    f = -0.5 + (np.arange(n) + 0.5) / n
    assert np.sum(psd_value(model, f)) / n == pytest.approx(model.sigma_h_sq, rel=1e-6)


def test_out_of_domain_frequency_rejected():
    with pytest.raises(ValueError):
        psd_value(RECT, 0.6)
    with pytest.raises(ValueError):
        psd_value(RECT, np.array([0.1, -0.51]))


def test_periodic_continuation():
    assert periodic_psd(RECT, 1.01) == pytest.approx(psd_value(RECT, 0.01))
    assert periodic_psd(RECT, -0.97) == pytest.approx(psd_value(RECT, 0.03))


@pytest.mark.parametrize("kwargs", [dict(f_d=0.0), dict(f_d=0.5), dict(f_d=0.1, sigma_h_sq=0.0)])
def test_invalid_rectangular(kwargs):
    with pytest.raises(ValueError):
        FadingPsd.rectangular(**kwargs)


@pytest.mark.parametrize("beta", [0.0, -0.1, 1.5])
def test_invalid_rolloff(beta):
    with pytest.raises(ValueError):
        FadingPsd.raised_cosine(0.1, beta)


def test_kind_enum_values():
    assert PsdKind("rectangular") is PsdKind.RECTANGULAR
    assert PsdKind("raised-cosine") is PsdKind.RAISED_COSINE


def test_rectangular_autocorrelation():
    assert autocorrelation(RECT, 0) == 1.0
    assert abs(autocorrelation(RECT, 10)) < 1e-15
    ref = float(mpmath.sin(0.3 * mpmath.pi) / (0.3 * mpmath.pi))
    assert autocorrelation(RECT, 3) == pytest.approx(ref, rel=1e-14)
    assert autocorrelation(RECT, 3) == pytest.approx(0.8584, abs=5e-5)
    assert autocorrelation(RECT, -3) == autocorrelation(RECT, 3)


def test_raised_cosine_autocorrelation_vs_closed_form():
    for lag in range(-100, 101):
        assert autocorrelation(RC, lag) == pytest.approx(raised_cosine_autocorr(lag, 0.1, 0.5), abs=1e-8)


def test_raised_cosine_autocorrelation_vs_numeric_inverse_transform():
    m = FadingPsd.raised_cosine(0.07, 0.3)
    n = 2 ** 18
    f = -0.5 + np.arange(n) / n
    s = psd_value(m, f)
    for lag in (0, 1, 5, 17, 60, 100):
        ref = np.sum(s * np.cos(2 * np.pi * f * lag)) / n
        assert autocorrelation(m, lag) == pytest.approx(ref, abs=1e-8)


def test_toeplitz_basics():
    t1 = toeplitz_correlation(RECT, 1)
    assert np.allclose(t1.first_row, [1.0])
    R = toeplitz_correlation(RC, 64).matrix
    assert np.trace(R).real == pytest.approx(64.0, rel=1e-12)
    assert np.allclose(R, R.conj().T)
    assert np.linalg.eigvalsh(toeplitz_correlation(RECT, 4).matrix).min() >= -1e-12


@settings(max_examples=25, deadline=None)
@given(
    f_d=st.floats(0.005, 0.45),
    beta=st.floats(0.05, 1.0),
    rect=st.booleans(),
    n=st.integers(2, 512),
    s2=st.floats(0.1, 10.0),
)
def test_toeplitz_is_hermitian_psd(f_d, beta, rect, n, s2):
    m = FadingPsd.rectangular(f_d, s2) if rect else FadingPsd.raised_cosine(f_d, beta, s2)
    R = toeplitz_correlation(m, n).matrix
    assert np.array_equal(R, R.conj().T)
    assert np.linalg.eigvalsh(R).min() >= -1e-9 * s2


def test_sequence_matches_pointwise():
    seq = autocorrelation_sequence(RC, 20)
    assert np.allclose(seq, [autocorrelation(RC, l) for l in range(20)], atol=0)


def test_circulant_n8_rectangular():
    c = circulant_equivalent(RECT, 8)
    expected = np.zeros(8)
    expected[0] = 10.0
    assert np.allclose(c.eigenvalues, expected)


def test_circulant_is_diagonalized_by_dft():
    c = circulant_equivalent(RC, 32)
    assert np.allclose(c.reconstruct(), c.matrix, atol=1e-12)
    assert np.allclose(np.sort(np.linalg.eigvalsh(c.matrix)), np.sort(c.eigenvalues), atol=1e-10)


def test_circulant_riemann_sum_convergence():
    c = circulant_equivalent(RC, 4096)
    assert np.sum(c.eigenvalues) / 4096 == pytest.approx(1.0, rel=1e-3)
    assert c.first_column[0].real == pytest.approx(1.0, rel=1e-3)


def test_weak_norm():
    I = np.eye(2)
    assert weak_norm_gap(I, I) == 0.0
    assert weak_norm_gap(I, np.zeros((2, 2))) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        weak_norm_gap(I, np.eye(3))


def test_weak_norm_gap_decreases_with_block_length():
    gaps = [weak_norm_gap(toeplitz_correlation(RC, n).matrix, circulant_equivalent(RC, n).matrix)
            for n in (64, 128, 256, 512)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_breakpoints():
    assert RECT.breakpoints == (-0.05, 0.05)
    bp = RC.breakpoints
    assert bp == pytest.approx((-0.1, -0.05, 0.05, 0.1))
    assert math.isclose(RC.flat_edge, 0.05)
