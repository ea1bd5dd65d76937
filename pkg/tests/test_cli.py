from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from nutm import cli
from nutm.exceptions import ConfigError

HEADER = "x,t,re_q,im_q,re_qx,im_qx,residual,n_total,pipeline"

DIRICHLET = {
    "mode": "linearizable",
    "lambda": -1,
    "initial": {"builtin": "x-gaussian"},
    "boundary": {"type": "dirichlet"},
    "eval": {"type": "points", "points": [[0.5, 0.25], [1.0, 0.5], [2.0, 1.0]]},
}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_zero_data_grid(tmp_path):
    cfg = {
        "mode": "linearizable",
        "lambda": -1,
        "initial": {"builtin": "zero"},
        "boundary": "dirichlet",
        "eval": {"type": "grid", "x0": 0, "x1": 2, "nx": 3, "t0": 0.5, "t1": 1, "nt": 2},
    }
    out = tmp_path / "out.csv"
    assert cli.main(["run", "--config", _write(tmp_path, cfg), "--output", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 6
    assert all(float(r[c]) == 0 for r in rows for c in ("re_q", "im_q", "re_qx", "im_qx"))
    assert out.read_text().splitlines()[0] == HEADER
    # time-major order
    assert [float(r["t"]) for r in rows] == [0.5] * 3 + [1.0] * 3


def test_deterministic_and_parallel(tmp_path):
    path = _write(tmp_path, DIRICHLET)
    outs = []
    for threads in ("1", "1", "3"):
        out = tmp_path / f"out{len(outs)}.csv"
        assert cli.main(["run", "--config", path, "--output", str(out), "--threads", threads]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_json_output(tmp_path):
    cfg = dict(DIRICHLET, eval={"type": "points", "points": [[1.0, 0.5]]})
    out = tmp_path / "out.json"
    assert cli.main(["run", "--config", _write(tmp_path, cfg), "--output", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["fields"] == HEADER.split(",")
    s = d["samples"][0]
    assert s["pipeline"] == "lensed" and s["n_total"] == sum(s["n_per_piece"])


@pytest.mark.parametrize(
    "cfg",
    [
        {"mode": "nonsense", "lambda": 1},
        {"mode": "linearizable", "lambda": 2, "initial": "gaussian"},
        dict(DIRICHLET, initial={"builtin": "exp-decay"}),
        dict(DIRICHLET, boundary={"type": "traces"}),
        dict(DIRICHLET, eval={"type": "spiral"}),
        dict(DIRICHLET, eval={"type": "points", "points": [[-1, 1]]}),
        {"mode": "overdetermined", "lambda": -1, "initial": {"builtin": "sech-soliton-trace"}, "boundary": "traces"},
    ],
)
def test_config_errors_exit_2(tmp_path, cfg):
    assert cli.main(["run", "--config", _write(tmp_path, cfg), "--output", str(tmp_path / "o.csv")]) == 2


def test_missing_config_file(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_exit_code_families():
    from nutm.exceptions import DomainError, SolverError, SpectralError, UnsupportedConfiguration

    assert cli.exit_code(SpectralError("x")) == 3
    assert cli.exit_code(UnsupportedConfiguration("x")) == 4
    assert cli.exit_code(SolverError("x")) == 5
    assert cli.exit_code(DomainError("x")) == 6
    assert cli.exit_code(RuntimeError("x")) == 1


def test_spectral_failure_exit_code(tmp_path):
    # sampled data that never decay inside the cutoff cap
    cfg = dict(DIRICHLET, initial={"samples": {"x": [0, 40, 80, 100], "re": [0, 1, 1, 1]}, "decay": 1.0})
    assert cli.main(["run", "--config", _write(tmp_path, cfg)]) == 3


def test_dump_spectral_zero_data():
    cfg = {"mode": "linearizable", "lambda": -1, "initial": "zero", "boundary": "dirichlet"}
    d = cli.dump_spectral(cfg)
    np.testing.assert_allclose(np.array(d["a_real"]), [[1.0, 0.0]] * len(d["k_real"]), atol=1e-14)
    np.testing.assert_allclose(np.array(d["b_real"]), 0, atol=1e-14)
    assert d["zeros"] == [] and d["poles"] == []


def test_dump_spectral_soliton(tmp_path):
    cfg = {
        "mode": "overdetermined",
        "lambda": 1,
        "initial": {"builtin": "sech-soliton-trace", "params": {"xi": 1, "eta": 1, "x0": 0.4}},
        "boundary": {"type": "traces"},
    }
    out = tmp_path / "spec.json"
    assert cli.main(["dump-spectral", "--config", _write(tmp_path, cfg), "--output", str(out)]) == 0
    d = json.loads(out.read_text())
    (z,) = d["zeros"]
    assert abs(complex(z["re"], z["im"]) - (1 + 0.6640367702647942j)) < 1e-8
    assert d["global_relation"]["residual"] < 1e-6
    assert "A_real" in d and "asymptotic" in d


def test_dump_spectral_neumann_csv(tmp_path):
    cfg = {
        "mode": "linearizable",
        "lambda": 1,
        "initial": {"terms": [{"builtin": "gaussian"}, {"builtin": "sech2", "coef": [0, 1]}]},
        "boundary": "neumann",
    }
    d = cli.dump_spectral(cfg)
    assert len(d["Gamma_positive_imaginary"]) == len(d["s_axes"])
    (pole,) = [p for p in d["poles"] if p["source"] == "d"]
    assert abs(pole["im"] - 0.6286865937342415) < 1e-8
    out = tmp_path / "spec.csv"
    assert cli.main(["dump_spectral", "--config", _write(tmp_path, cfg), "--output", str(out), "--format", "csv"]) == 0
    assert out.read_text().splitlines()[0].startswith("k,re_gamma,im_gamma,re_a")


def test_sampled_function_matches_builtin():
    x = np.linspace(0, 8, 801)
    obj = {"samples": {"x": x.tolist(), "re": (x * np.exp(-(x**2))).tolist()}, "decay": 2.0}
    f = cli.parse_function(obj)
    s = np.array([0.3, 1.7, 9.0])
    np.testing.assert_allclose(f.f(s), np.where(s < 8, s * np.exp(-(s**2)), 0), atol=1e-7)
    with pytest.raises(ConfigError):
        cli.parse_function({"samples": {"x": [0, 1], "re": [0, 1]}, "decay": 1})


def test_convergence_mode():
    cfg = {
        "mode": "overdetermined",
        "lambda": 1,
        "initial": {"builtin": "sech-soliton-trace", "params": {"xi": 1, "eta": 1, "x0": 0.4}},
        "boundary": {"type": "traces"},
        "eval": {"type": "convergence", "point": [0.4, 0.4], "n": [8, 16], "reference": "exact"},
    }
    samples = cli.run(cfg)
    assert [s.extras["n"] for s in samples] == [8, 16]
    assert samples[1].extras["error"] < samples[0].extras["error"]


def test_env_override(monkeypatch):
    monkeypatch.setenv("NUTM_RADIUS", "30")
    est = cli._solver({"tolerances": {"radius": 50}})
    assert est.radius == 30.0
