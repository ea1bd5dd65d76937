from __future__ import annotations

import numpy as np
import pytest

from conftest import SOLITON
from nutm.boundary import GammaPair
from nutm.dressing import DressingSpec, Rational
from nutm.estimator import NUTMSolver, SolutionSample
from nutm.exceptions import ConfigError
from nutm.oracles import exact_eval


def _zero_pair():
    zero = lambda k: 0 * np.asarray(k, dtype=complex)
    return GammaPair(gamma=zero, Gamma=zero, lam=-1, alpha_strip=0.5, meta={"q0_at_0": 0.0})


def test_params_round_trip():
    est = NUTMSolver(n=16, adaptive=False)
    params = est.get_params()
    assert params["n"] == 16 and params["adaptive"] is False
    clone = NUTMSolver(**params)
    assert clone.get_params() == params
    assert est.set_params(pipeline="undeformed") is est
    assert est.pipeline == "undeformed"
    with pytest.raises(ConfigError):
        est.set_params(bogus=1)
    assert "NUTMSolver(" in repr(est)


def test_fit_returns_self_and_predict_requires_fit():
    est = NUTMSolver()
    with pytest.raises(ConfigError):
        est.predict([(1.0, 1.0)])
    assert est.fit(_zero_pair()) is est
    with pytest.raises(ConfigError):
        est.fit("not a pair")


def test_zero_data_prediction():
    est = NUTMSolver().fit(_zero_pair())
    np.testing.assert_array_equal(est.predict([(0.0, 0.5), (1.0, 1.0)]), 0)
    s = est.sample([1.0, 1.0])[0]
    assert isinstance(s, SolutionSample) and s.n_total == 0


def test_point_shape_validation():
    est = NUTMSolver().fit(_zero_pair())
    with pytest.raises(ConfigError):
        est.predict([1.0, 2.0, 3.0])
    with pytest.raises(ConfigError):
        est.predict([(-1.0, 1.0)])


def test_soliton_prediction(soliton_pair):
    est = NUTMSolver().fit(soliton_pair)
    pts = [(0.4, 0.4), (1.0, 0.25)]
    q = est.predict(pts)
    exact = np.array([exact_eval(SOLITON, x, t) for x, t in pts])
    assert np.max(np.abs(q - exact)) < 1e-6
    s = est.sample(pts[:1])[0]
    assert s.pipeline == "lensed" and s.radius > 0 and s.residual < 1e-7
    row = s.row()
    assert list(row) == ["x", "t", "re_q", "im_q", "re_qx", "im_qx", "residual", "n_total", "pipeline"]


def test_fit_accepts_dressing_spec():
    spec = DressingSpec(Rational.zero(), Rational.zero(), ((-1 + 1j, 100.0),))
    est = NUTMSolver().fit(spec)
    assert est.pair_.kind == "dressing"
    assert np.isfinite(est.predict([(1.0, 0.5)])).all()
