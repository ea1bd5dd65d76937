from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import SOLITON
from nutm.chebyshev import Circle, Segment
from nutm.exceptions import SolverError
from nutm.oracles import exact_eval, exact_eval_qx
from nutm.rhp import JumpPiece, PhaseParams, RHProblem, build_rhp
from nutm.solver import recover_q, recover_qx, solve, solve_fixed, verify_jump

J0 = np.array([[1.0, 0.5 + 0.2j], [-0.3j, 1.0 + (0.5 + 0.2j) * (-0.3j)]])


def _const(J):
    return lambda k: np.broadcast_to(J, np.shape(np.atleast_1d(k)) + (2, 2)).copy()


def _problem(pieces):
    return RHProblem(pieces, PhaseParams(0.0, 0.0), 1, "custom")


def test_identity_jumps_give_zero():
    rhp = _problem([JumpPiece(Segment(-1, 1, 16), _const(np.eye(2)))])
    rep = solve(rhp, adaptive=False)
    assert np.max(np.abs(rep.densities[0])) == 0
    assert recover_q(rep) == 0 and recover_qx(rep) == 0
    assert verify_jump(rep) < 1e-15


def test_constant_jump_circle():
    assert abs(np.linalg.det(J0) - 1) < 1e-15
    circ = Circle(0.3 + 0.2j, 1.0, 21)
    rep = solve(_problem([JumpPiece(circ, _const(J0))]), adaptive=False)
    # Phi = J0 inside, I outside, so the density is J0 - I
    assert np.max(np.abs(rep.densities[0] - (J0 - np.eye(2)))) < 1e-12
    assert verify_jump(rep) < 1e-11
    np.testing.assert_allclose(rep.psi(0.3 + 0.2j + 0.1)[0], J0, atol=1e-12)
    np.testing.assert_allclose(rep.psi(5.0)[0], np.eye(2), atol=1e-12)


def test_non_finite_jump_rejected():
    bad = lambda k: np.full(np.shape(np.atleast_1d(k)) + (2, 2), np.nan)
    with pytest.raises(SolverError):
        solve(_problem([JumpPiece(Segment(0, 1, 8), bad)]))


def test_budget_exceeded(soliton_pair):
    rhp = build_rhp(soliton_pair, 0.4, 0.4)
    with pytest.raises(SolverError):
        solve(rhp, n=64, budget=100)


def test_residual_decays_geometrically(soliton_pair):
    rhp = build_rhp(soliton_pair, 0.4, 0.4)
    res = [solve(rhp, n=n, adaptive=False).residual for n in (8, 16, 32)]
    assert res[1] < 0.1 * res[0] and res[2] < 0.1 * res[1]


def test_soliton_q_qx_det(soliton_pair):
    rep = solve(build_rhp(soliton_pair, 0.4, 0.4))
    assert abs(recover_q(rep) - exact_eval(SOLITON, 0.4, 0.4)) < 1e-6
    assert abs(recover_qx(rep) - exact_eval_qx(SOLITON, 0.4, 0.4)) < 1e-5
    assert rep.det_error < 1e-8
    # the residual indicator tracks the observed error within an order of magnitude or better
    assert abs(recover_q(rep) - exact_eval(SOLITON, 0.4, 0.4)) < 10 * rep.residual
    d = json.loads(rep.to_json())
    assert d["n_total"] == rep.n_total and d["pipeline"] == "lensed"


def test_fixed_sizes_match_geometry(soliton_pair):
    rhp = build_rhp(soliton_pair, 1.0, 0.5)
    sizes = [12] * len(rhp.pieces)
    rep = solve_fixed(rhp, sizes)
    assert all(g.n in (12, 13) for g in rep.geometries)
