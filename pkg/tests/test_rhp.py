from __future__ import annotations

import numpy as np
import pytest

from conftest import SOLITON, dressing_example
from nutm.dressing import build_dressed_pair
from nutm.exceptions import ConfigError
from nutm.oracles import exact_eval
from nutm.rhp import PhaseParams, build_delta, build_rhp, select_pipeline, tolerances


def _max_det_error(rhp) -> float:
    worst = 0.0
    for p in rhp.pieces:
        J = p.jump(p.geometry.points())
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        worst = max(worst, float(np.max(np.abs(det - 1))))
    return worst


@pytest.mark.parametrize(
    "x,t,pipeline",
    [(0.4, 0.4, "lensed"), (4.0, 1.0, "lensed"), (0.4, 0.4, "undeformed"), (0.4, 0.4, "steepest"), (1.0, 0.02, "smallxt")],
)
def test_jump_determinants_soliton(soliton_pair, x, t, pipeline):
    rhp = build_rhp(soliton_pair, x, t, pipeline=pipeline, q0_at_0=exact_eval(SOLITON, 0.0, 0.0))
    assert rhp.pieces
    assert _max_det_error(rhp) < 1e-12


def test_jump_determinants_other_data(neumann_setup, dirichlet_setup):
    assert _max_det_error(build_rhp(neumann_setup[0], 0.5, 0.0, pipeline="smallxt", q0_at_0=1 + 1j)) < 1e-12
    assert _max_det_error(build_rhp(dirichlet_setup[0], 1.0, 0.5)) < 1e-12
    assert _max_det_error(build_rhp(build_dressed_pair(dressing_example()), 6.0, 1.0)) < 1e-12


def test_truncation_records_soliton(soliton_pair):
    rhp = build_rhp(soliton_pair, 4.0, 1.0)
    tol, _ = tolerances()
    cut = [r for r in rhp.records if r["rule"] == "tol"]
    assert cut
    assert all(r["cut_dev"] <= tol * 1.0001 for r in cut)
    # every ray is clipped at finite length by the tolerance rule
    assert not any(r["rule"] == "radius" for r in rhp.records)


def test_truncation_smallxt_uses_radius(neumann_setup):
    rhp = build_rhp(neumann_setup[0], 0.5, 0.0, pipeline="smallxt", q0_at_0=1 + 1j)
    real_axis = [r for r in rhp.records if r["label"] in ("axis-0", "axis-2")]
    # the real-axis jumps do not decay to the tolerance inside the disk
    assert len(real_axis) == 2
    assert all(r["rule"] == "radius" and r["cut_dev"] > 1e-6 for r in real_axis)
    assert rhp.meta["radius"] == 50.0


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("NUTM_TRUNC_TOL", "1e-7")
    monkeypatch.setenv("NUTM_RADIUS", "30")
    assert tolerances() == (1e-7, 30.0)
    monkeypatch.setenv("NUTM_RADIUS", "-1")
    with pytest.raises(ConfigError):
        tolerances()


def test_delta_jump_and_expansion(neumann_setup):
    pair = neumann_setup[0]
    k0 = -0.3
    d = build_delta(pair, k0)
    k = np.array([-0.5, -1.7, -4.0]) + 0j
    ratio = d(k, 1) / d(k, -1)
    np.testing.assert_allclose(ratio, pair.tau(k), atol=1e-10)
    big = np.array([300j, -300j, 300.0 + 0j])
    np.testing.assert_allclose((d(big) - 1) * big, d.delta1, atol=1e-3)
    assert abs(d.delta1) > 1e-3


def test_phase_params():
    p = PhaseParams(2.0, 0.5)
    assert p.k0 == -1.0
    k = np.array([0.3 + 0.2j])
    np.testing.assert_allclose(p.exponent(k), 2j * p.theta(k), atol=1e-13)
    with pytest.raises(ConfigError):
        PhaseParams(-1.0, 1.0)


def test_select_pipeline():
    assert select_pipeline(1.0, 0.0) == "smallxt"
    assert select_pipeline(1.0, 0.5) == "lensed"
    assert select_pipeline(200.0, 1.0) == "smallxt"


def test_unknown_pipeline(soliton_pair):
    with pytest.raises(ConfigError):
        build_rhp(soliton_pair, 1.0, 1.0, pipeline="bogus")
