from __future__ import annotations

import numpy as np
import pytest

from conftest import dressing_example
from nutm.dressing import (
    DressingSpec,
    Rational,
    build_dressed_pair,
    build_dressed_rhp,
    check_global_relation_dressing,
)
from nutm.exceptions import ConfigError, UnsupportedConfiguration
from nutm.oracles import ExactSolutionParams, exact_eval
from nutm.solver import recover_q, solve


def test_rational_evaluation():
    r = Rational.from_roots([0.0, 2.0], scale=3.0, poles=[1j, -2.0])
    k = np.array([0.5, 1 + 1j])
    np.testing.assert_allclose(r(k), 6 * k / ((k - 1j) * (k + 2)), atol=1e-14)
    assert abs(r.leading_1_over_k() - 6) < 1e-14
    assert sorted(r.poles(), key=lambda z: z.real)[0] == pytest.approx(-2.0)
    back = Rational.from_json(r.to_json())
    np.testing.assert_allclose(back(k), r(k), atol=1e-14)
    assert Rational.from_json("zero").is_zero


def test_rational_growth_rejected():
    with pytest.raises(ConfigError):
        Rational((1.0, 1.0), (1.0,)).leading_1_over_k()
    with pytest.raises(ConfigError):
        Rational((1.0,), (0.0,))


def test_spec_validation():
    z = Rational.zero()
    with pytest.raises(ConfigError):
        DressingSpec(z, z, ((1 - 1j, 1.0),))
    with pytest.raises(ConfigError):
        DressingSpec(z, z, ((1 + 1j, 0.0),))
    with pytest.raises(ConfigError):
        DressingSpec(z, z, ((1 + 1j, 1.0), (1 + 1j, 2.0)))
    with pytest.raises(ConfigError):
        DressingSpec(z, z, ((1 + 1j, 1.0),), lam=-1)
    with pytest.raises(UnsupportedConfiguration):
        DressingSpec(z, z, ((1j, 1.0),)).check()


def test_from_gamma_round_trip():
    spec = dressing_example()
    k = np.array([1 + 1j, -0.5 + 2j, 3j])
    expected = 1000 * k / (k - 2 * (1 - 1j)) ** 5
    np.testing.assert_allclose(spec.Gamma(k), expected, rtol=1e-13)
    again = DressingSpec.from_json(spec.dumps())
    np.testing.assert_allclose(again.Gamma(k), expected, rtol=1e-13)
    assert again.poles == spec.poles


def test_single_pole_is_a_soliton():
    z, c = -1 + 1.0j, 100.0 + 0j
    spec = DressingSpec(Rational.zero(), Rational.zero(), ((z, c),))
    pair = build_dressed_pair(spec)
    xi, eta = z.real, z.imag
    params = ExactSolutionParams("soliton", xi, eta, np.log(abs(c) / (2 * eta)) / (2 * eta))
    shift = np.exp(-1j * (np.angle(c) + np.pi / 2))
    for x, t in [(1.0, 0.5), (3.0, 0.2)]:
        q = recover_q(solve(build_dressed_rhp(spec, x, t, pair=pair)))
        assert abs(q - shift * exact_eval(params, x, t)) < 1e-8


def test_dressed_pair_metadata():
    pair = build_dressed_pair(dressing_example())
    assert pair.kind == "dressing" and pair.certified
    assert pair.meta["q0_at_0"] == 0
    assert len(pair.poles) == 2 and all(p.source == "d" for p in pair.poles)


def test_global_relation_report():
    rep = check_global_relation_dressing(dressing_example())
    assert rep.passed and rep.residual == 0
