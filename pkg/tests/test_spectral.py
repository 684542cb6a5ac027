import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from impulsive_fg.spectral import (SemigroupBounds, SpectralDomainError, Spectrum, alpha_norm,
                                   check_operator_bounds, fractional_power_apply, project,
                                   scaled_norm, semigroup_apply, sharp_constant,
                                   smoothing_tightness)

SP = Spectrum.dirichlet_laplacian(32)
coeffs = arrays(np.float64, 32, elements=st.floats(-10, 10, allow_nan=False))
times = st.floats(0.0, 2.0, allow_nan=False)


def test_dirichlet_eigenvalues_start_at_pi_squared():
    assert SP[0] == pytest.approx(math.pi**2, rel=1e-15)
    assert SP[3] == pytest.approx(16 * math.pi**2, rel=1e-15)
    assert SP.size == len(SP) == 32


def test_spectrum_rejects_bad_input():
    with pytest.raises(SpectralDomainError):
        Spectrum(np.array([1.0, 0.5]))
    with pytest.raises(SpectralDomainError):
        Spectrum(np.array([-1.0, 2.0]))


def test_scalar_semigroup_value():
    # e^{-pi^2 / 10} = 0.372708...
    v = SP.unit(0)
    assert semigroup_apply(SP, 0.1, v)[0] == pytest.approx(0.37270783, abs=1e-8)


def test_alpha_norm_two_modes():
    # ||A^{1/2}(psi_1 + psi_2)|| = sqrt(pi^2 + 4 pi^2) = pi sqrt 5
    v = SP.unit(0) + SP.unit(1)
    assert alpha_norm(SP, 0.5, v) == pytest.approx(7.024814731, abs=1e-8)


def test_alpha_norm_reduces_last_axis():
    v = np.ones((5, 32))
    out = alpha_norm(SP, 0.25, v)
    assert out.shape == (5,)
    assert np.allclose(out, alpha_norm(SP, 0.25, v[0]))


def test_sharp_constant_values():
    assert sharp_constant(0.5) == pytest.approx(0.42888194, abs=1e-8)
    assert sharp_constant(0.0) == 1.0
    # sup of s^x e^{-s} by brute force
    s = np.linspace(1e-6, 10, 200001)
    assert sharp_constant(0.8) == pytest.approx(float(np.max(s**0.8 * np.exp(-s))), rel=1e-8)


def test_domain_errors():
    with pytest.raises(SpectralDomainError):
        semigroup_apply(SP, -1.0, SP.zeros())
    with pytest.raises(SpectralDomainError):
        fractional_power_apply(SP, 1.5, SP.zeros())
    with pytest.raises(SpectralDomainError):
        project(-1, SP.zeros())


@settings(max_examples=60, deadline=None)
@given(coeffs, times)
def test_semigroup_contraction(v, t):
    assert alpha_norm(SP, 0.0, semigroup_apply(SP, t, v)) <= alpha_norm(SP, 0.0, v) * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(coeffs, times, times)
def test_semigroup_law(v, t, s):
    lhs = semigroup_apply(SP, t + s, v)
    rhs = semigroup_apply(SP, t, semigroup_apply(SP, s, v))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-300)


@settings(max_examples=60, deadline=None)
@given(coeffs, st.integers(0, 31))
def test_projection_idempotent_and_tail_bound(v, n):
    p = project(n, v)
    assert np.array_equal(project(n, p), p)
    tail = v - p
    # ||A^a (I - P^n) v|| <= lambda_{n+1}^{a - b} ||A^b v|| for a < b
    if n < 31:
        a, b = 0.25, 0.75
        assert alpha_norm(SP, a, tail) <= SP[n + 1] ** (a - b) * alpha_norm(SP, b, v) * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(coeffs, st.floats(0.0, 1.0))
def test_fractional_power_matches_norm(v, a):
    assert np.linalg.norm(fractional_power_apply(SP, a, v)) == pytest.approx(alpha_norm(SP, a, v), rel=1e-12)


def test_scaled_norm_negative_exponent():
    v = SP.unit(0)
    assert scaled_norm(SP, -0.5, v) == pytest.approx(1 / math.pi)


def test_operator_bounds_hold_and_report_ratio():
    bounds = SemigroupBounds()
    samples = [(t, d, 0.5, 0.25) for t, d in zip(np.geomspace(1e-4, 1, 20), np.geomspace(1e-5, 0.5, 20))]
    rep = check_operator_bounds(Spectrum.dirichlet_laplacian(1024), bounds, samples)
    assert len(rep.checks) == 60
    assert rep.passed
    assert 0.5 < rep.worst_ratio <= 1.0


def test_operator_bounds_flag_a_too_small_constant():
    class Loose(SemigroupBounds):
        def M_alpha(self, alpha):
            return 0.5 * super().M_alpha(alpha)

    rep = check_operator_bounds(Spectrum.dirichlet_laplacian(1024), Loose(), [(1e-3, 1e-3, 0.5, 0.25)])
    assert not rep.passed
    assert rep.flagged[0].kind == "smoothing"


def test_operator_bounds_reject_alpha_plus_nu_ge_one():
    with pytest.raises(SpectralDomainError):
        check_operator_bounds(SP, SemigroupBounds(), [(0.1, 0.1, 0.6, 0.5)])


def test_smoothing_tightness_hits_sharp_constant():
    sp = Spectrum.dirichlet_laplacian(1024)
    times = 0.5 / sp.eigenvalues
    assert smoothing_tightness(sp, 0.5, times) == pytest.approx(1.0, abs=1e-12)
    assert smoothing_tightness(sp, 0.5, np.array([10.0])) < 0.01
