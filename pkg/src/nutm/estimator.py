"""Estimator-style front end: fit spectral data once, predict ``q`` anywhere.

``NUTMSolver`` follows the scikit-learn conventions (constructor arguments
are stored verbatim, ``get_params``/``set_params``, ``fit`` returns
``self``, fitted state ends with an underscore) without depending on it.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, field

import numpy as np

from .boundary import GammaPair
from .chebyshev import Circle, Segment
from .dressing import DressingSpec, build_dressed_pair
from .exceptions import ConfigError
from .rhp import build_rhp
from .solver import N_BUDGET, N_MAX, SolveReport, recover_q, recover_qx, solve

__all__ = ["SolutionSample", "NUTMSolver", "radius_reached"]

CSV_FIELDS = ("x", "t", "re_q", "im_q", "re_qx", "im_qx", "residual", "n_total", "pipeline")


@dataclass(frozen=True)
class SolutionSample:
    """Value of the solution at one point plus solve diagnostics."""

    x: float
    t: float
    q: complex
    qx: complex
    residual: float
    radius: float
    n_per_piece: tuple = ()
    pipeline: str = ""
    cond_estimate: float = float("nan")
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def n_total(self) -> int:
        return int(sum(self.n_per_piece))

    def row(self) -> dict:
        """Flat record in the CSV column order."""
        return {
            "x": self.x,
            "t": self.t,
            "re_q": self.q.real,
            "im_q": self.q.imag,
            "re_qx": self.qx.real,
            "im_qx": self.qx.imag,
            "residual": self.residual,
            "n_total": self.n_total,
            "pipeline": self.pipeline,
        }

    def to_dict(self) -> dict:
        out = self.row()
        out.update(
            radius=self.radius,
            n_per_piece=list(self.n_per_piece),
            cond_estimate=self.cond_estimate,
        )
        out.update(self.extras)
        return out

    @classmethod
    def from_report(cls, report: SolveReport, **extras) -> "SolutionSample":
        rhp = report.rhp
        return cls(
            x=float(rhp.phase.x),
            t=float(rhp.phase.t),
            q=recover_q(report),
            qx=recover_qx(report),
            residual=float(report.residual),
            radius=radius_reached(report),
            n_per_piece=tuple(int(g.n) for g in report.geometries),
            pipeline=rhp.pipeline,
            cond_estimate=float(report.cond_estimate),
            extras=extras,
        )


def radius_reached(report: SolveReport) -> float:
    """Largest ``|k|`` touched by the truncated contour."""
    r = 0.0
    for g in report.geometries:
        if isinstance(g, Circle):
            r = max(r, abs(g.center) + g.radius)
        elif isinstance(g, Segment):
            r = max(r, abs(g.a), abs(g.b))
    return float(r)


class NUTMSolver:
    """Pointwise solver for the half-line problem.

    Parameters
    ----------
    pipeline : str
        ``auto``, ``lensed``, ``steepest``, ``undeformed`` or ``smallxt``.
    n : int, optional
        Starting collocation size per piece.
    adaptive : bool
        Refine pieces until the jump residual meets ``target``.
    target : float, optional
        Residual target; ten times ``trunc_tol`` by default.
    trunc_tol, radius : float, optional
        Truncation settings; environment or library defaults when ``None``.
    n_max, budget : int
        Per-piece and total node limits.

    Examples
    --------
    >>> solver = NUTMSolver().fit(pair)           # doctest: +SKIP
    >>> solver.predict([(0.4, 0.4), (1.0, 0.5)])  # doctest: +SKIP
    """

    def __init__(
        self,
        pipeline: str = "auto",
        n: int | None = None,
        adaptive: bool = True,
        target: float | None = None,
        trunc_tol: float | None = None,
        radius: float | None = None,
        n_max: int = N_MAX,
        budget: int = N_BUDGET,
    ):
        self.pipeline = pipeline
        self.n = n
        self.adaptive = adaptive
        self.target = target
        self.trunc_tol = trunc_tol
        self.radius = radius
        self.n_max = n_max
        self.budget = budget

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "NUTMSolver":
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ConfigError(f"invalid parameter {key!r} for NUTMSolver")
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"NUTMSolver({args})"

    def fit(self, data, q0_at_0: complex | None = None) -> "NUTMSolver":
        """Store the jump data.

        Parameters
        ----------
        data : GammaPair or DressingSpec
            Output of the boundary-condition module or a dressing spec.
        q0_at_0 : complex, optional
            ``q0(0)``, needed only by the small-(x,t) pipeline when the
            pair does not carry it.
        """
        if isinstance(data, DressingSpec):
            data = build_dressed_pair(data)
        if not isinstance(data, GammaPair):
            raise ConfigError("fit expects a GammaPair or a DressingSpec")
        self.pair_ = data
        self.q0_at_0_ = q0_at_0 if q0_at_0 is not None else data.meta.get("q0_at_0")
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "pair_"):
            raise ConfigError("NUTMSolver is not fitted; call fit first")

    def solve_point(self, x: float, t: float) -> SolveReport:
        """Full solve report at one point."""
        self._check_fitted()
        if x < 0 or t < 0:
            raise ConfigError("points must satisfy x >= 0 and t >= 0")
        kw = {} if self.n is None else {"n": int(self.n)}
        rhp = build_rhp(
            self.pair_,
            float(x),
            float(t),
            pipeline=self.pipeline,
            q0_at_0=self.q0_at_0_,
            trunc_tol=self.trunc_tol,
            radius=self.radius,
            **kw,
        )
        return solve(
            rhp,
            n=self.n,
            target=self.target,
            n_max=self.n_max,
            adaptive=self.adaptive,
            budget=self.budget,
        )

    def sample(self, X) -> list[SolutionSample]:
        """One ``SolutionSample`` per row ``(x, t)`` of ``X``, in order."""
        pts = _as_points(X)
        return [SolutionSample.from_report(self.solve_point(x, t)) for x, t in pts]

    def predict(self, X) -> np.ndarray:
        """``q`` at the rows ``(x, t)`` of ``X``."""
        return np.array([s.q for s in self.sample(X)], dtype=complex)

    def predict_qx(self, X) -> np.ndarray:
        """``q_x`` at the rows ``(x, t)`` of ``X``."""
        return np.array([s.qx for s in self.sample(X)], dtype=complex)


def _as_points(X) -> np.ndarray:
    pts = np.asarray(X, dtype=float)
    if pts.ndim == 1 and pts.size == 2:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ConfigError("points must have shape (m, 2) with columns x, t")
    return pts
