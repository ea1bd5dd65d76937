from __future__ import annotations

import io

import numpy as np
import pytest

from nutm.exceptions import ConfigError, DomainError
from nutm.oracles import (
    ExactSolutionParams,
    asymptotic_amplitude,
    asymptotic_eval,
    exact_eval,
    exact_eval_qx,
    fit_phase,
    fit_phase_trend,
    mass,
    pde_oracle,
)


def test_soliton_peak():
    p = ExactSolutionParams("soliton", 1.0, 1.0, 0.0)
    assert abs(exact_eval(p, 0.0, 0.0) - 2) < 1e-15


def test_soliton_modulus_at_sample_point():
    p = ExactSolutionParams("soliton", 1.0, 1.0, 0.4)
    assert abs(abs(exact_eval(p, 0.4, 0.4)) - 2 / np.cosh(3.2)) < 1e-15


def test_positon_modulus():
    p = ExactSolutionParams("positon", 1.0, 1.0, -1.0)
    assert abs(abs(exact_eval(p, 0.0, 0.0)) - 2 / np.sinh(2.0)) < 1e-15
    assert np.isfinite(exact_eval(p, 400.0, 0.0))


def test_positon_validation():
    with pytest.raises(ConfigError):
        ExactSolutionParams("positon", 1.0, 1.0, 0.5)
    with pytest.raises(ConfigError):
        ExactSolutionParams("kink", 1.0, 1.0, 0.0)
    p = ExactSolutionParams("positon", 1.0, 1.0, -1.0)
    with pytest.raises(DomainError):
        exact_eval(p, -1.0, 0.0)


@pytest.mark.parametrize("family,x0", [("soliton", 0.4), ("positon", -1.0)])
def test_qx_matches_finite_difference(family, x0):
    p = ExactSolutionParams(family, 0.7, 1.1, x0)
    h = 1e-5
    for x, t in [(0.3, 0.2), (1.5, 0.7)]:
        fd = (exact_eval(p, x + h, t) - exact_eval(p, x - h, t)) / (2 * h)
        assert abs(exact_eval_qx(p, x, t) - fd) < 1e-7


def test_exact_solutions_solve_nls():
    # i q_t + q_xx + 2 lam |q|^2 q = 0 by central differences
    h = 1e-3
    for p in (ExactSolutionParams("soliton", 1.0, 1.0, 0.4), ExactSolutionParams("positon", 1.0, 1.0, -1.0)):
        x, t = 0.8, 0.3
        q = exact_eval(p, x, t)
        qt = (exact_eval(p, x, t + h) - exact_eval(p, x, t - h)) / (2 * h)
        qxx = (exact_eval(p, x + h, t) - 2 * q + exact_eval(p, x - h, t)) / h**2
        assert abs(1j * qt + qxx + 2 * p.lam * abs(q) ** 2 * q) < 1e-4


def test_asymptotic_amplitude_zero():
    gamma = lambda k: 0.3 * np.ones_like(k)
    Gamma = lambda k: -0.3 * np.ones_like(k)
    amp = asymptotic_amplitude(gamma, Gamma, 1, np.linspace(-2, 2, 5))
    np.testing.assert_allclose(amp, 0, atol=1e-16)
    q = asymptotic_eval(gamma, Gamma, 1, 2.0, 1.0)
    assert q == 0


def test_defocusing_amplitude_sign():
    gamma = lambda k: 0.5 / (1 + k**2)
    Gamma = lambda k: 0 * k
    k = np.linspace(-3, 3, 31)
    assert np.all(asymptotic_amplitude(gamma, Gamma, -1, k) >= 0)
    with pytest.raises(DomainError):
        asymptotic_amplitude(lambda k: 1.5 + 0 * k, Gamma, -1, k)


def test_fit_phase_recovers_constant():
    t = np.linspace(1, 3, 9)
    base = np.exp(1j * t**2) / np.sqrt(t)
    q = base * np.exp(0.7j)
    assert abs(fit_phase(q, base) - 0.7) < 1e-12
    drift = base * np.exp(1j * (0.7 + 0.2 / t))
    assert abs(fit_phase_trend(drift, base, t) - 0.7) < 1e-12


def test_oracle_zero_data():
    res = pde_oracle(lambda x: 0 * x, "dirichlet", -1, x_max=10, nx=128, t_end=0.5, dt=0.05, times=[0, 0.5])
    assert np.max(np.abs(res.q)) == 0


def test_oracle_whole_line_soliton():
    p = ExactSolutionParams("soliton", 1.0, 1.0, 0.0)
    res = pde_oracle(lambda x: exact_eval(p, x, 0.0), "whole-line", 1, x_max=20, nx=512, t_end=0.5, dt=2.5e-3, times=[0, 0.5])
    x = np.array([-1.0, 0.3, 1.1])
    assert np.max(np.abs(res.at(x, 0.5) - exact_eval(p, x, 0.5))) < 1e-5
    qx = res.at(x, 0.5, derivative=1)
    assert np.max(np.abs(qx - exact_eval_qx(p, x, 0.5))) < 1e-5
    assert 1.7 < res.order < 2.3


def test_oracle_mass_conservation():
    q0 = lambda x: np.exp(-(x**2)) * x
    times = np.linspace(0, 1, 5)
    res = pde_oracle(q0, "dirichlet", -1, x_max=24, nx=1024, t_end=1.0, dt=5e-3, times=times)
    masses = [mass(res.x, row) for row in res.q]
    assert max(masses) - min(masses) < 1e-5
    assert res.reflection < 1e-6


def test_oracle_csv_schema():
    res = pde_oracle(lambda x: x * np.exp(-(x**2)), "dirichlet", -1, x_max=12, nx=256, t_end=0.2, dt=0.01, times=[0.2])
    buf = io.StringIO()
    res.write_csv([(0.5, 0.2), (1.0, 0.2)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,t,re_q,im_q,re_qx,im_qx,residual,n_total,pipeline"
    assert len(lines) == 3 and lines[1].endswith("pde-oracle")


def test_oracle_rejects_long_runs():
    with pytest.raises(ConfigError):
        pde_oracle(lambda x: 0 * x, t_end=3.0)
    with pytest.raises(ConfigError):
        pde_oracle(lambda x: 0 * x, bc="periodic")
