from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.special import wofz

from conftest import SOLITON, x_gaussian
from nutm.chebyshev import Circle, integrate
from nutm.exceptions import ConfigError, SpectralError
from nutm.spectral import (
    BoundaryData,
    InitialData,
    asymptotic_coefficients,
    check_compatibility,
    check_global_relation,
    choose_cutoff,
    compute_ab,
)

K_LARGE = np.concatenate([np.linspace(-50, -20, 31), np.linspace(20, 50, 31)]) + 0j


def _ode_ab(q0, lam, k, L=12.0):
    """Independent adaptive integration from x = L down to 0."""

    def rhs(x, y):
        p1 = y[0] + 1j * y[1]
        p2 = y[2] + 1j * y[3]
        d1 = -2j * k * p1 + q0(x) * p2
        d2 = -lam * np.conj(q0(x)) * p1
        return [d1.real, d1.imag, d2.real, d2.imag]

    sol = solve_ivp(rhs, (L, 0.0), [0, 0, 1, 0], method="DOP853", rtol=1e-12, atol=1e-14)
    y = sol.y[:, -1]
    return y[2] + 1j * y[3], y[0] + 1j * y[1]


def test_initial_data_validation():
    with pytest.raises(ConfigError):
        InitialData(np.exp, alpha=1.0, lam=0)
    with pytest.raises(ConfigError):
        InitialData(np.exp, alpha=-1.0, lam=1)
    with pytest.raises(ConfigError):
        BoundaryData(np.exp, np.exp)


def test_zero_data():
    spec = compute_ab(InitialData(lambda x: 0 * x, alpha=1.0, lam=-1))
    a, b = spec.ab(np.linspace(-5, 5, 11) + 0j)
    np.testing.assert_allclose(a, 1, atol=1e-14)
    np.testing.assert_allclose(b, 0, atol=1e-14)


def test_cutoff_rejects_slow_decay():
    with pytest.raises(SpectralError):
        choose_cutoff(lambda x: 1 / (1 + x), lambda x: -1 / (1 + x) ** 2)


def test_unimodularity(dirichlet_setup):
    _, spec, _ = dirichlet_setup
    k = np.linspace(-20, 20, 200) + 0j
    a, b = spec.ab(k)
    assert np.max(np.abs(np.abs(a) ** 2 - np.abs(b) ** 2 - 1)) < 1e-8


def test_unimodularity_focusing(neumann_setup):
    _, spec, _ = neumann_setup
    k = np.linspace(-20, 20, 200) + 0j
    a, b = spec.ab(k)
    assert np.max(np.abs(np.abs(a) ** 2 + np.abs(b) ** 2 - 1)) < 1e-8


def test_linear_mode_is_half_line_fourier():
    init = InitialData(lambda x: np.exp(-(x**2)), alpha=2.0, lam=0, linear_test_mode=True)
    spec = compute_ab(init)
    k = np.linspace(-6, 6, 50)
    a, b = spec.ab(k + 0j)
    # int_0^inf e^{2ikx - x^2} dx = sqrt(pi)/2 w(k)
    np.testing.assert_allclose(a, 1, atol=1e-12)
    assert np.max(np.abs(b + np.sqrt(np.pi) / 2 * wofz(k))) < 1e-8


def test_ode_oracle_agreement(dirichlet_setup):
    _, spec, _ = dirichlet_setup
    rng = np.random.default_rng(7)
    for k in rng.uniform(-6, 6, 10):
        a_ode, b_ode = _ode_ab(x_gaussian, -1, k)
        a, b = spec.ab(np.array([k + 0j]))
        assert abs(a[0] - a_ode) < 1e-8 and abs(b[0] - b_ode) < 1e-8


def test_continuation_matches_cauchy_integral(dirichlet_setup):
    _, spec, _ = dirichlet_setup
    for k in (0.3, -1.7, 2.5):
        c = Circle(k, 0.4, 64)
        s = c.points()
        z = k + 0.1j
        recon = integrate(c, spec.a(s) / (s - z)) / (2j * np.pi)
        assert abs(recon - spec.a(np.array([z]))[0]) < 1e-6


def test_large_k_expansion_of_a_b(dirichlet_setup):
    _, spec, init = dirichlet_setup
    co = asymptotic_coefficients(init)
    a, b = spec.ab(K_LARGE)
    ra = np.abs(a - 1 - co.a1 / K_LARGE) * np.abs(K_LARGE) ** 2
    rb = np.abs(b - co.b1 / K_LARGE - co.b2 / K_LARGE**2) * np.abs(K_LARGE) ** 3
    assert np.max(ra) < 1 and np.max(rb) < 1


def test_large_k_expansion_with_traces(soliton_setup):
    _, spec, bspec, init, bdata = soliton_setup
    co = asymptotic_coefficients(init, bdata)
    a, b = spec.ab(K_LARGE)
    A, B = bspec.AB(K_LARGE)
    k = K_LARGE
    for val in (
        np.abs(a - 1 - co.a1 / k) * np.abs(k) ** 2,
        np.abs(b - co.b1 / k - co.b2 / k**2) * np.abs(k) ** 3,
        np.abs(A - 1 - co.A1 / k) * np.abs(k) ** 2,
        np.abs(B - co.B1 / k - co.B2 / k**2) * np.abs(k) ** 3,
    ):
        assert np.max(val) < 5
        # bounded, not growing
        assert np.max(val[np.abs(k) > 40]) < 1.5 * np.max(val[np.abs(k) < 30])


def test_soliton_zero(soliton_setup):
    _, spec, *_ = soliton_setup
    assert len(spec.zeros) == 1
    # Newton-refined zero of a for the x0 = 0.4 soliton restricted to x >= 0
    assert abs(spec.zeros[0].p - (1 + 0.6640367702647942j)) < 1e-8
    assert spec.zeros[0].residual < 1e-10


def test_global_relation_exact_traces(soliton_setup):
    _, spec, bspec, *_ = soliton_setup
    rep = check_global_relation(spec, bspec)
    assert rep.passed and rep.residual < 1e-6


def test_compatibility_failure_for_exp_decay():
    init = InitialData(lambda x: np.exp(-x), alpha=0.9, lam=1)
    rep = check_compatibility(init, g0=lambda t: 0 * t)
    assert not rep.passed


def test_compatibility_of_soliton_traces(soliton_setup):
    *_, init, bdata = soliton_setup
    assert check_compatibility(init, bdata.g0, bdata.g1).passed
    assert SOLITON.lam == 1
