"""Collocation solver for matrix Riemann-Hilbert problems.

The solution is written ``Psi = I + C u`` with ``u`` sampled at the nodes
of each piece.  The jump condition ``Psi_+ = Psi_- J`` becomes

    u - C_-[u] (J - I) = J - I

at every node.  Row ``r`` of ``u`` only couples to row ``r`` of itself, so
the two rows share one complex matrix of size ``2N`` and are solved as two
right-hand sides.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .chebyshev import (
    Circle,
    Segment,
    boundary_matrix,
    boundary_rows,
    cauchy_off,
    chebpts,
    integrate,
    node_parameters,
)
from .exceptions import DomainError, SolverError
from .rhp import RHProblem, _norm2

logger = logging.getLogger(__name__)

__all__ = ["SolveReport", "solve", "recover_q", "recover_qx", "verify_jump", "solve_fixed"]

N_MAX = 192
# Node budget keeping the dense system below about a gigabyte.
N_BUDGET = 3200
_COND_LIMIT = 1e13


@dataclass
class SolveReport:
    """Densities and diagnostics of one solve.

    ``residual`` is the largest jump residual ``||Psi_+ - Psi_- J||`` at
    points between the nodes; ``det_error`` is ``max |det Psi - 1|`` at a
    few off-contour probes.
    """

    rhp: RHProblem
    geometries: list
    densities: list
    residual: float
    cond_estimate: float
    piece_residuals: list = field(default_factory=list)
    det_error: float = float("nan")
    iterations: int = 1

    @property
    def n_total(self) -> int:
        return int(sum(g.n for g in self.geometries))

    def psi(self, z) -> np.ndarray:
        """``Psi(z)`` at points off the contour, shape ``(m, 2, 2)``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        c = cauchy_off(self.geometries, self.densities, z)
        return np.eye(2) + c

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """``(m1, m2)`` with ``Psi = I + m1/k + m2/k^2 + ...``."""
        m1 = np.zeros((2, 2), dtype=complex)
        m2 = np.zeros((2, 2), dtype=complex)
        for g, u in zip(self.geometries, self.densities):
            m1 += integrate(g, u)
            s = g.points()
            m2 += integrate(g, s[:, None, None] * u)
        return -m1 / (2j * np.pi), -m2 / (2j * np.pi)

    def to_dict(self) -> dict:
        return {
            "pipeline": self.rhp.pipeline,
            "x": self.rhp.phase.x,
            "t": self.rhp.phase.t,
            "n_total": self.n_total,
            "n_per_piece": [int(g.n) for g in self.geometries],
            "residual": float(self.residual),
            "piece_residuals": [float(r) for r in self.piece_residuals],
            "cond_estimate": float(self.cond_estimate),
            "det_error": float(self.det_error),
            "iterations": self.iterations,
            "pieces": self.rhp.diagnostics(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _jumps_at_nodes(rhp: RHProblem, geoms) -> np.ndarray:
    blocks = []
    for p, g in zip(rhp.pieces, geoms):
        J = p.jump(g.points())
        if not np.all(np.isfinite(J)):
            raise SolverError(f"non-finite jump on piece {p.label}")
        blocks.append(J)
    return np.concatenate(blocks)


def solve_fixed(rhp: RHProblem, sizes) -> SolveReport:
    """Solve with the given number of nodes per piece."""
    geoms = [p.geometry.with_n(int(n)) for p, n in zip(rhp.pieces, sizes)]
    if not geoms:
        return SolveReport(rhp, [], [], 0.0, 1.0, [], 0.0)
    J = _jumps_at_nodes(rhp, geoms)
    W = J - np.eye(2)
    N = W.shape[0]
    C = boundary_matrix(geoms, -1)
    # A[(i,b),(j,a)] = delta - C[i,j] W[i,a,b]
    A = np.empty((N, 2, N, 2), dtype=complex)
    Wt = np.transpose(W, (0, 2, 1))
    np.multiply(C[:, None, :, None], Wt[:, :, None, :], out=A)
    del C
    A = A.reshape(2 * N, 2 * N)
    np.negative(A, out=A)
    A[np.diag_indices(2 * N)] += 1.0
    rhs = Wt.reshape(2 * N, 2)  # rhs[(i,b), r] = W[i,r,b]
    anorm = np.linalg.norm(A, 1)
    lu, piv, info = scipy.linalg.lapack.zgetrf(A, overwrite_a=True)
    if info != 0:
        raise SolverError("singular collocation matrix", np.inf)
    rcond, _ = scipy.linalg.lapack.zgecon(lu, anorm, norm="1")
    cond = 1 / rcond if rcond > 0 else np.inf
    if cond > _COND_LIMIT:
        raise SolverError(f"collocation matrix is ill-conditioned ({cond:.2e})", cond)
    X, _ = scipy.linalg.lapack.zgetrs(lu, piv, rhs)
    # X[(j,a), r] = u_j[r, a]
    U = np.transpose(X.reshape(N, 2, 2), (0, 2, 1))
    dens, start = [], 0
    for g in geoms:
        dens.append(U[start : start + g.n])
        start += g.n
    report = SolveReport(rhp, geoms, dens, np.nan, cond)
    report.piece_residuals = _piece_residuals(report)
    report.residual = max(report.piece_residuals) if report.piece_residuals else 0.0
    return report


def _check_params(g, m: int = 8) -> np.ndarray:
    """Parameters strictly between collocation nodes."""
    if isinstance(g, Circle):
        return (np.arange(m) + 0.5) * 2 * np.pi / m * g.orientation
    if isinstance(g, Segment):
        x = chebpts(2 * m + 1)[1:-1:2]
        return x
    x = chebpts(2 * m + 2)[1:-2:2]
    return x


def _piece_residuals(report: SolveReport, m: int = 8) -> list[float]:
    out = []
    geoms, dens = report.geometries, report.densities
    for i, (p, g) in enumerate(zip(report.rhp.pieces, geoms)):
        tau = _check_params(g, m)
        plus = np.eye(2) + sum(np.tensordot(r, u, axes=(1, 0)) for r, u in zip(boundary_rows(geoms, i, tau, 1), dens))
        minus = np.eye(2) + sum(np.tensordot(r, u, axes=(1, 0)) for r, u in zip(boundary_rows(geoms, i, tau, -1), dens))
        if isinstance(g, Circle):
            pts = g.center + g.radius * np.exp(1j * tau)
        else:
            pts = g.map(tau)
        res = _norm2(plus - minus @ p.jump(pts))
        out.append(float(np.max(res)))
    return out


def verify_jump(report: SolveReport, m: int = 8) -> float:
    """Largest jump residual at points between the collocation nodes."""
    return max(_piece_residuals(report, m), default=0.0)


def _det_error(report: SolveReport) -> float:
    pts = []
    for g in report.geometries:
        if isinstance(g, Circle):
            pts.append(g.center + 1.5 * g.radius)
        elif isinstance(g, Segment):
            mid = (g.a + g.b) / 2
            pts.append(mid + 0.3 * 1j * (g.b - g.a) / abs(g.b - g.a) * min(1.0, g.length()))
    pts = np.array(pts[:12], dtype=complex)
    good = []
    for z in pts:
        try:
            good.append(report.psi(z)[0])
        except DomainError:
            continue
    if not good:
        return float("nan")
    P = np.array(good)
    det = P[:, 0, 0] * P[:, 1, 1] - P[:, 0, 1] * P[:, 1, 0]
    return float(np.max(np.abs(det - 1)))


def solve(
    rhp: RHProblem,
    n: int | None = None,
    target: float | None = None,
    n_max: int = N_MAX,
    adaptive: bool = True,
    budget: int = N_BUDGET,
) -> SolveReport:
    """Solve ``rhp``, refining pieces whose jump residual exceeds ``target``.

    Parameters
    ----------
    n : int, optional
        Starting nodes per piece (the piece default otherwise).  With
        ``adaptive=False`` every piece uses exactly ``n``.
    target : float, optional
        Defaults to ten times the truncation tolerance of ``rhp``.
    """
    if target is None:
        target = 10 * rhp.meta.get("trunc_tol", 1e-9)
    sizes = [n if n is not None else p.geometry.n for p in rhp.pieces]
    if sum(sizes) > budget:
        raise SolverError(f"{sum(sizes)} nodes exceed the budget of {budget}")
    report = solve_fixed(rhp, sizes)
    it = 1
    while adaptive:
        bad = [i for i, r in enumerate(report.piece_residuals) if r > target and sizes[i] < n_max]
        if not bad:
            break
        new = list(sizes)
        for i in bad:
            new[i] = min(n_max, 2 * sizes[i])
        if sum(new) > budget:
            logger.warning("node budget reached with residual %.2e", report.residual)
            break
        sizes = new
        report = solve_fixed(rhp, sizes)
        it += 1
    report.iterations = it
    report.det_error = _det_error(report)
    logger.info(
        "solved %s at (x,t)=(%g,%g): n=%d residual=%.2e cond=%.2e",
        rhp.pipeline, rhp.phase.x, rhp.phase.t, report.n_total, report.residual, report.cond_estimate,
    )
    return report


def _normalized_moments(report: SolveReport):
    m1, m2 = report.moments()
    f1 = report.rhp.f1
    m1_22 = m1[1, 1] - f1
    m2_12 = m2[0, 1] - m1[0, 1] * f1
    return m1, m1_22, m2_12


def recover_q(report: SolveReport) -> complex:
    """``q(x, t) = 2i lim k Phi_12``."""
    m1, _, _ = _normalized_moments(report)
    return complex(2j * m1[0, 1])


def recover_qx(report: SolveReport) -> complex:
    """``q_x`` from the ``1/k^2`` coefficient of ``Phi``."""
    m1, m1_22, m2_12 = _normalized_moments(report)
    q = 2j * m1[0, 1]
    return complex(4 * m2_12 + 2j * q * m1_22)
