"""Command-line front end.

A run is described by one JSON document::

    {
      "mode": "linearizable" | "overdetermined" | "dressing",
      "lambda": -1,
      "initial": {"builtin": "x-gaussian"},
      "boundary": {"type": "dirichlet"},
      "eval": {"type": "grid", "x0": 0, "x1": 2, "nx": 5, "t0": 0.25, "t1": 1, "nt": 4},
      "tolerances": {"trunc_tol": 1e-9, "radius": 50},
      "solver": {"pipeline": "auto"},
      "output": {"path": "out.csv", "format": "csv"}
    }

Functions are named built-ins with parameters, sums of built-ins
(``{"terms": [...]}``) or sampled arrays (``{"samples": {"x": ..., "re":
..., "im": ...}, "decay": rate}``).  Boundary traces use the same schema
in the variable ``t``.  Exit codes: 0 success, 2 configuration error,
3 spectral failure, 4 unsupported deformation, 5 solver failure, 6 other
package errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .boundary import GammaPair, certify_strip, dirichlet_gamma, neumann_gamma, overdetermined_gamma, robin_gamma
from .dressing import DressingSpec, Rational, build_dressed_pair, check_global_relation_dressing
from .estimator import CSV_FIELDS, NUTMSolver, SolutionSample
from .exceptions import ConfigError, NUTMError, SolverError, SpectralError, UnsupportedConfiguration
from .oracles import ExactSolutionParams, exact_eval, exact_eval_qx
from .spectral import (
    BoundaryData,
    InitialData,
    asymptotic_coefficients,
    check_compatibility,
    check_global_relation,
    compute_AB,
    compute_ab,
    rational_continuation,
)

__all__ = [
    "EXIT_CODES",
    "Problem",
    "load_config",
    "build_problem",
    "evaluation_points",
    "run",
    "dump_spectral",
    "write_samples",
    "main",
]

logger = logging.getLogger("nutm")

EXIT_CODES = {
    ConfigError: 2,
    SpectralError: 3,
    UnsupportedConfiguration: 4,
    SolverError: 5,
    NUTMError: 6,
}

_MODES = ("linearizable", "overdetermined", "dressing")


def exit_code(exc: BaseException) -> int:
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return 1


# ---------------------------------------------------------------------------
# Function specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Function:
    f: Callable
    df: Callable
    decay: float


def _cnum(v, default: complex = 1.0) -> complex:
    if v is None:
        return complex(default)
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError("complex numbers are given as [re, im]")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _sech(z):
    e = np.exp(-np.abs(z))
    return 2 * e / (1 + e * e)


def _exact_params(family: str, p: dict) -> ExactSolutionParams:
    return ExactSolutionParams(
        family, float(p.get("xi", 1.0)), float(p.get("eta", 1.0)), float(p.get("x0", 0.4 if family == "soliton" else -1.0))
    )


def _builtin(name: str, p: dict) -> _Function:
    amp = _cnum(p.get("amp"))
    w = float(p.get("width", 1.0))
    if w <= 0:
        raise ConfigError("width must be positive")
    if name == "zero":
        return _Function(lambda x: np.zeros_like(x, dtype=complex), lambda x: np.zeros_like(x, dtype=complex), 2.0)
    if name == "gaussian":
        c = float(p.get("center", 0.0))
        f = lambda x: amp * np.exp(-(((x - c) / w) ** 2))
        return _Function(f, lambda x: -2 * (x - c) / w**2 * f(x), 2.0)
    if name == "x-gaussian":
        f = lambda x: amp * x * np.exp(-((x / w) ** 2))
        return _Function(f, lambda x: amp * (1 - 2 * x**2 / w**2) * np.exp(-((x / w) ** 2)), 2.0)
    if name == "sech2":
        f = lambda x: amp * _sech(x / w) ** 2
        return _Function(f, lambda x: -2 / w * np.tanh(x / w) * f(x), 1.0 / w)
    if name == "exp-decay":
        r = float(p.get("rate", 1.0))
        if r <= 0:
            raise ConfigError("exp-decay needs a positive rate")
        f = lambda x: amp * np.exp(-r * x)
        return _Function(f, lambda x: -r * f(x), 0.9 * r)
    raise ConfigError(f"unknown built-in function {name!r}")


def _samples(obj: dict, decay) -> _Function:
    try:
        x = np.asarray(obj["x"], dtype=float)
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed sampled function: {exc}") from exc
    if decay is None or not float(decay) > 0:
        raise ConfigError("sampled functions need a positive 'decay' rate")
    if x.ndim != 1 or x.size < 4 or x.shape != re.shape or x.shape != im.shape or np.any(np.diff(x) <= 0):
        raise ConfigError("samples need at least 4 increasing abscissae with matching values")
    spline = CubicSpline(x, re + 1j * im)
    deriv = spline.derivative()
    end = x[-1]

    def f(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= end, spline(np.minimum(s, end)), 0.0)

    def df(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= end, deriv(np.minimum(s, end)), 0.0)

    return _Function(f, df, float(decay))


def parse_function(obj) -> _Function:
    """Function of one real variable from its JSON description."""
    if isinstance(obj, str):
        obj = {"builtin": obj}
    if not isinstance(obj, dict):
        raise ConfigError(f"cannot parse function {obj!r}")
    if "terms" in obj:
        parts = [parse_function(t) for t in obj["terms"]]
        if not parts:
            raise ConfigError("'terms' must not be empty")
        coefs = [_cnum(t.get("coef") if isinstance(t, dict) else None) for t in obj["terms"]]
        f = lambda x: sum(c * p.f(x) for c, p in zip(coefs, parts))
        df = lambda x: sum(c * p.df(x) for c, p in zip(coefs, parts))
        decay = obj.get("decay", min(p.decay for p in parts))
        return _Function(f, df, float(decay))
    if "samples" in obj:
        return _samples(obj["samples"], obj.get("decay"))
    if "builtin" in obj:
        fn = _builtin(obj["builtin"], obj.get("params", {}))
        if "decay" in obj:
            fn = _Function(fn.f, fn.df, float(obj["decay"]))
        return fn
    raise ConfigError("a function needs 'builtin', 'terms' or 'samples'")


_TRACE_BUILTINS = {"sech-soliton-trace": "soliton", "positon-trace": "positon"}


def _exact_from(obj) -> ExactSolutionParams | None:
    if isinstance(obj, dict) and obj.get("builtin") in _TRACE_BUILTINS:
        return _exact_params(_TRACE_BUILTINS[obj["builtin"]], obj.get("params", {}))
    return None


# ---------------------------------------------------------------------------
# Problem assembly
# ---------------------------------------------------------------------------


@dataclass
class Problem:
    """Everything derived from a configuration before any point is solved."""

    config: dict
    pair: GammaPair
    q0_at_0: complex | None
    init: InitialData | None = None
    spec: object = None
    bspec: object = None
    bdata: BoundaryData | None = None
    dressing: DressingSpec | None = None
    exact: ExactSolutionParams | None = None
    reports: dict = field(default_factory=dict)


def load_config(path_or_obj) -> dict:
    if isinstance(path_or_obj, dict):
        return path_or_obj
    try:
        with open(path_or_obj, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from exc


def _initial_data(cfg: dict, lam: int) -> tuple[InitialData, ExactSolutionParams | None]:
    obj = cfg.get("initial")
    if obj is None:
        raise ConfigError("this mode needs an 'initial' function")
    exact = _exact_from(obj)
    if exact is not None:
        if exact.lam != lam:
            raise ConfigError(f"{obj['builtin']} requires lambda = {exact.lam}")
        f = lambda x: exact_eval(exact, x, 0.0)
        df = lambda x: exact_eval_qx(exact, x, 0.0)
        decay = float(obj.get("decay", 1.2 * exact.eta))
    else:
        fn = parse_function(obj)
        f, df, decay = fn.f, fn.df, fn.decay
    linear = bool(cfg.get("linear_test_mode", False))
    return InitialData(f, decay, lam, dq0=df, linear_test_mode=linear), exact


def _traces(bobj: dict, exact: ExactSolutionParams | None) -> BoundaryData:
    T = bobj.get("T")
    T = np.inf if T is None else float(T)
    trace_exact = _exact_from(bobj) or (exact if "g0" not in bobj else None)
    if trace_exact is not None:
        if trace_exact.xi <= 0:
            raise ConfigError("trace built-ins need xi > 0 so the boundary data decay")
        beta = float(bobj.get("decay", 8 * trace_exact.xi * trace_exact.eta))
        return BoundaryData(
            lambda t: exact_eval(trace_exact, 0.0, t),
            lambda t: exact_eval_qx(trace_exact, 0.0, t),
            T=T,
            beta=beta,
        )
    if "g0" not in bobj or "g1" not in bobj:
        raise ConfigError("traces need 'g0' and 'g1' (or a trace built-in)")
    g0, g1 = parse_function(bobj["g0"]), parse_function(bobj["g1"])
    beta = float(bobj.get("decay", min(g0.decay, g1.decay)))
    return BoundaryData(g0.f, g1.f, T=T, beta=beta)


def _check_corner(init: InitialData, btype: str, rho: float) -> None:
    q00 = complex(init.value(0.0))
    dq00 = complex(init.derivative(0.0))
    tol = 1e-8
    if btype == "dirichlet" and abs(q00) > tol:
        raise ConfigError(f"homogeneous Dirichlet data need q0(0) = 0, got {q00:.3g}")
    if btype == "neumann" and abs(dq00) > 1e-6:
        raise ConfigError(f"homogeneous Neumann data need q0'(0) = 0, got {dq00:.3g}")
    if btype == "robin" and abs(dq00 - rho * q00) > 1e-6:
        raise ConfigError("Robin data need q0'(0) = rho q0(0)")


def _dressing_spec(obj: dict, lam: int) -> DressingSpec:
    if "Gamma" in obj:
        poles = [(complex(p["re"], p["im"]), complex(p["c_re"], p.get("c_im", 0.0))) for p in obj.get("poles", [])]
        gamma = Rational.from_json(obj.get("gamma", "zero"))
        return DressingSpec.from_gamma(gamma, Rational.from_json(obj["Gamma"]), tuple(poles), int(obj.get("lambda", lam)))
    obj = dict(obj)
    obj.setdefault("lambda", lam)
    return DressingSpec.from_json(obj)


def build_problem(config) -> Problem:
    """Validate a configuration and compute its jump data."""
    cfg = load_config(config)
    mode = cfg.get("mode")
    if mode not in _MODES:
        raise ConfigError(f"mode must be one of {_MODES}")
    lam = cfg.get("lambda")
    if lam not in (-1, 0, 1):
        raise ConfigError("lambda must be -1, 0 or +1")
    if mode == "dressing":
        obj = cfg.get("dressing") or cfg.get("boundary")
        if not isinstance(obj, dict):
            raise ConfigError("dressing mode needs a 'dressing' spec")
        ds = _dressing_spec(obj, lam)
        pair = build_dressed_pair(ds)
        return Problem(cfg, pair, pair.meta.get("q0_at_0"), dressing=ds)

    init, exact = _initial_data(cfg, lam)
    bobj = cfg.get("boundary", {"type": "dirichlet"})
    if isinstance(bobj, str):
        bobj = {"type": bobj}
    btype = bobj.get("type")
    reports = {}
    alpha = cfg.get("alpha")
    if mode == "linearizable":
        if btype not in ("dirichlet", "neumann", "robin"):
            raise ConfigError("linearizable mode needs boundary type dirichlet, neumann or robin")
        rho = float(bobj.get("rho", 1.0))
        _check_corner(init, btype, rho)
        spec = compute_ab(init)
        if btype == "dirichlet":
            pair = dirichlet_gamma(spec)
        elif btype == "neumann":
            pair = neumann_gamma(spec)
        else:
            pair = robin_gamma(spec, rho=rho)
        pair = certify_strip(pair, alpha=alpha)
        return Problem(cfg, pair, complex(init.value(0.0)), init=init, spec=spec, exact=exact, reports=reports)

    if btype != "traces":
        raise ConfigError("overdetermined mode needs boundary type 'traces'")
    bdata = _traces(bobj, exact)
    comp = check_compatibility(init, bdata.g0, bdata.g1)
    reports["compatibility"] = comp
    if not comp.passed:
        raise ConfigError(
            f"initial and boundary data are incompatible at the corner: q0(0)={comp.q0_at_0:.3g}, g0(0)={comp.g0_at_0:.3g}"
        )
    spec = compute_ab(init)
    bspec = compute_AB(bdata, lam)
    if np.isinf(bdata.T):
        try:
            bspec = rational_continuation(bspec)
        except SpectralError as exc:
            logger.warning("keeping axis evaluation of A, B: %s", exc)
    gr = check_global_relation(spec, bspec)
    reports["global_relation"] = gr
    if not gr.passed:
        logger.warning("global relation residual %.2e", gr.residual)
    pair = overdetermined_gamma(spec, bspec)
    if alpha is not None:
        pair = certify_strip(pair, alpha=alpha)
    return Problem(
        cfg, pair, complex(init.value(0.0)), init=init, spec=spec, bspec=bspec, bdata=bdata, exact=exact, reports=reports
    )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluation_points(ev: dict) -> np.ndarray:
    """Points ``(x, t)`` in output order (time-major for grids)."""
    kind = ev.get("type")
    try:
        if kind == "points":
            pts = np.asarray(ev["points"], dtype=float).reshape(-1, 2)
        elif kind == "grid":
            xs = np.linspace(float(ev["x0"]), float(ev["x1"]), int(ev["nx"]))
            ts = np.linspace(float(ev["t0"]), float(ev["t1"]), int(ev["nt"]))
            pts = np.array([(x, t) for t in ts for x in xs], dtype=float).reshape(-1, 2)
        elif kind == "ray":
            ts = np.asarray(ev["t"], dtype=float)
            pts = np.column_stack([float(ev["ratio"]) * ts, ts])
        elif kind == "convergence":
            pts = np.asarray(ev["point"], dtype=float).reshape(1, 2)
        else:
            raise ConfigError("eval type must be points, grid, ray or convergence")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed eval section: {exc}") from exc
    if pts.size and (np.any(pts[:, 0] < 0) or np.any(pts[:, 1] < 0)):
        raise ConfigError("evaluation points need x >= 0 and t >= 0")
    return pts


def _env_float(name: str, value):
    env = os.environ.get(name)
    return float(env) if env is not None else (None if value is None else float(value))


def _solver(cfg: dict) -> NUTMSolver:
    tol = cfg.get("tolerances", {})
    opts = cfg.get("solver", {})
    return NUTMSolver(
        pipeline=opts.get("pipeline", "auto"),
        n=opts.get("n"),
        adaptive=bool(opts.get("adaptive", True)),
        target=tol.get("target"),
        trunc_tol=_env_float("NUTM_TRUNC_TOL", tol.get("trunc_tol")),
        radius=_env_float("NUTM_RADIUS", tol.get("radius")),
    )


def _reference(problem: Problem, ref, x: float, t: float) -> complex | None:
    if ref is None:
        return None
    if ref == "exact":
        if problem.exact is None:
            raise ConfigError("reference 'exact' needs a trace built-in")
        return complex(exact_eval(problem.exact, x, t))
    if ref == "initial":
        if t != 0 or problem.init is None:
            raise ConfigError("reference 'initial' needs t = 0 and initial data")
        return complex(problem.init.value(x))
    return _cnum(ref)


def run(config, threads: int = 1) -> list[SolutionSample]:
    """Solve at every evaluation point of the configuration."""
    problem = config if isinstance(config, Problem) else build_problem(config)
    cfg = problem.config
    ev = cfg.get("eval")
    if not isinstance(ev, dict):
        raise ConfigError("configuration needs an 'eval' section")
    pts = evaluation_points(ev)
    solver = _solver(cfg)
    if np.any(pts[:, 1] <= 0) and solver.pipeline not in ("auto", "smallxt", "undeformed"):
        raise ConfigError("points with t = 0 need the auto, smallxt or undeformed pipeline")
    solver.fit(problem.pair, q0_at_0=problem.q0_at_0)
    if ev["type"] == "convergence":
        x, t = pts[0]
        ref = _reference(problem, ev.get("reference"), x, t)
        out = []
        for n in ev.get("n", [8, 16, 32, 64]):
            s = solver.set_params(n=int(n), adaptive=False)
            sample = SolutionSample.from_report(s.solve_point(x, t), n=int(n))
            if ref is not None:
                sample.extras["error"] = abs(sample.q - ref)
            out.append(sample)
        return out

    def one(p):
        return SolutionSample.from_report(solver.solve_point(p[0], p[1]))

    if threads > 1 and len(pts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, pts))
    return [one(p) for p in pts]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v) + 0.0)


def write_samples(samples, fh, fmt: str = "csv") -> None:
    """Write samples as CSV (fixed header) or JSON."""
    if fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for s in samples:
            row = s.row()
            w.writerow([_fmt(row[k]) for k in CSV_FIELDS])
    elif fmt == "json":
        json.dump({"fields": list(CSV_FIELDS), "samples": [_jsonable(s.to_dict()) for s in samples]}, fh, indent=2)
        fh.write("\n")
    else:
        raise ConfigError("format must be csv or json")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.complexfloating):
        return [float(obj.real), float(obj.imag)]
    return obj


# ---------------------------------------------------------------------------
# Spectral dump
# ---------------------------------------------------------------------------


def _pairs(values) -> list:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex).ravel()]


def dump_spectral(config, k_max: float = 10.0, samples: int = 201) -> dict:
    """Sampled spectral functions and diagnostics of a configuration."""
    problem = config if isinstance(config, Problem) else build_problem(config)
    pair = problem.pair
    k = np.linspace(-k_max, k_max, samples)
    s = np.linspace(0, k_max, (samples + 1) // 2)[1:]
    out = {
        "mode": problem.config.get("mode"),
        "lambda": pair.lam,
        "strip_half_width": pair.alpha_strip,
        "k_real": k.tolist(),
        "gamma_real": _pairs(pair.gamma(k + 0j)),
        "s_axes": s.tolist(),
        "Gamma_negative_real": _pairs(pair.Gamma(-s + 0j)),
        "Gamma_positive_imaginary": _pairs(pair.Gamma(1j * s)),
        "poles": [
            {"re": p.z.real, "im": p.z.imag, "c_re": complex(p.c).real, "c_im": complex(p.c).imag, "source": p.source}
            for p in pair.poles
        ],
    }
    if problem.spec is not None:
        spec = problem.spec
        a, b = spec.ab(k + 0j)
        out["a_real"] = _pairs(a)
        out["b_real"] = _pairs(b)
        out["zeros"] = [
            {"re": z.p.real, "im": z.p.imag, "c_re": z.c.real, "c_im": z.c.imag, "residual": z.residual} for z in spec.zeros
        ]
        co = asymptotic_coefficients(problem.init, problem.bdata)
        out["asymptotic"] = {
            key: _jsonable(complex(v))
            for key, v in (("a1", co.a1), ("b1", co.b1), ("b2", co.b2), ("A1", co.A1), ("B1", co.B1), ("B2", co.B2))
            if v is not None
        }
        out["mass"] = co.mass
    if problem.bspec is not None:
        A, B = problem.bspec.AB(k + 0j)
        out["A_real"] = _pairs(A)
        out["B_real"] = _pairs(B)
    gr = problem.reports.get("global_relation")
    if gr is not None:
        out["global_relation"] = {"residual": gr.residual, "passed": gr.passed}
    elif problem.dressing is not None:
        rep = check_global_relation_dressing(problem.dressing)
        out["global_relation"] = {"residual": rep.residual, "passed": rep.passed, "note": rep.note}
    else:
        out["global_relation"] = {"residual": 0.0, "passed": True, "note": "boundary values eliminated by symmetry"}
    return _jsonable(out)


def _dump_csv(d: dict, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    cols = [c for c in ("gamma_real", "a_real", "b_real", "A_real", "B_real") if c in d]
    w.writerow(["k"] + [f"{p}_{c[:-5]}" for c in cols for p in ("re", "im")])
    for i, kv in enumerate(d["k_real"]):
        w.writerow([_fmt(kv)] + [_fmt(d[c][i][j]) for c in cols for j in (0, 1)])


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nutm", description="Half-line NLS solutions by the numerical unified transform method.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "evaluate q(x,t) at the configured points"), ("dump-spectral", "write sampled spectral data")):
        p = sub.add_parser(name, help=help_, aliases=["dump_spectral"] if name == "dump-spectral" else [])
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--output", help="output file (default: config output.path or stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--threads", type=int, default=1, help="worker threads for multi-point runs")
        p.add_argument("--log", choices=("quiet", "info", "debug"), default="quiet")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}[args.log]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        # the output section describes run results only
        out_cfg = cfg.get("output", {}) if args.command == "run" else {}
        path = args.output or out_cfg.get("path")
        fmt = args.format or out_cfg.get("format") or (
            "json" if (path and path.endswith(".json")) or args.command != "run" else "csv"
        )
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        buf = io.StringIO()
        if args.command == "run":
            write_samples(run(cfg, threads=args.threads), buf, fmt)
        else:
            d = dump_spectral(cfg)
            if fmt == "csv":
                _dump_csv(d, buf)
            else:
                json.dump(d, buf, indent=2)
                buf.write("\n")
        if path:
            try:
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    fh.write(buf.getvalue())
            except OSError as exc:
                raise ConfigError(f"cannot write output: {exc}") from exc
        else:
            sys.stdout.write(buf.getvalue())
    except NUTMError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exit_code(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
