"""Mapped Chebyshev discretizations of contour pieces and Cauchy transforms.

A contour is a list of pieces.  Segments and rays are parametrized by
``tau`` in ``[-1, 1]`` (affine map for segments, Moebius map for rays) and
sampled at Chebyshev points of the second kind; circles are sampled at
equispaced angles.  Densities are stored as node values, one array per
piece, with arbitrary trailing shape (scalars or 2x2 matrices).

The Cauchy transform ``(Cf)(z) = (1/2 pi i) int f(s) / (s - z) ds`` of a
Chebyshev interpolant is evaluated exactly through the three-term
recurrence for ``int T_k(tau) / (tau - zeta) dtau``.  Targets far from a
piece switch to Gauss-Legendre quadrature of the interpolant, which is
exact to rounding there and avoids the growth of the recurrence.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DomainError, NonIntegrableError

__all__ = [
    "ContourPiece",
    "Segment",
    "Ray",
    "Circle",
    "chebpts",
    "collocation_points",
    "interpolate",
    "integrate",
    "differentiate",
    "cauchy_off",
    "cauchy_boundary",
    "boundary_matrix",
    "boundary_rows",
    "off_matrix",
    "coefficients",
]

TWO_PI_I = 2j * np.pi
# Recurrence is used while the Bernstein growth rho**n stays below this.
_RECURRENCE_GROWTH = 1e4
# Angular offset used to pick a side when a target sits on a junction.
_SIDE_ANGLE = 1e-13


# ---------------------------------------------------------------------------
# Reference-interval tools
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def chebpts(n: int) -> np.ndarray:
    """Chebyshev points of the second kind on [-1, 1], ascending."""
    if n < 2:
        raise ValueError("need at least two Chebyshev points")
    x = -np.cos(np.pi * np.arange(n) / (n - 1))
    # exact symmetry and exact zero for odd n
    x = (x - x[::-1]) / 2
    x.setflags(write=False)
    return x


@functools.lru_cache(maxsize=None)
def _bary_weights(n: int) -> np.ndarray:
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    w.setflags(write=False)
    return w


@functools.lru_cache(maxsize=None)
def _vals2coeffs(n: int) -> np.ndarray:
    """Matrix mapping values at ``chebpts(n)`` to Chebyshev-T coefficients."""
    j = np.arange(n)
    # ascending node j is cos(pi*(n-1-j)/(n-1))
    theta = np.pi * (n - 1 - j) / (n - 1)
    k = np.arange(n)[:, None]
    mat = np.cos(k * theta[None, :]) * (2.0 / (n - 1))
    mat[:, 0] *= 0.5
    mat[:, -1] *= 0.5
    mat[0, :] *= 0.5
    mat[-1, :] *= 0.5
    mat.setflags(write=False)
    return mat


def coefficients(values: np.ndarray) -> np.ndarray:
    """Chebyshev-T coefficients of the interpolant through node values."""
    values = np.asarray(values)
    n = values.shape[0]
    return np.tensordot(_vals2coeffs(n), values, axes=(1, 0))


@functools.lru_cache(maxsize=None)
def _moments(n: int) -> np.ndarray:
    """Integrals of T_k over [-1, 1] for k < n."""
    k = np.arange(n, dtype=float)
    m = np.zeros(n)
    even = k % 2 == 0
    m[even] = 2.0 / (1.0 - k[even] ** 2)
    m.setflags(write=False)
    return m


@functools.lru_cache(maxsize=None)
def cc_weights(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights for ``chebpts(n)``."""
    w = _moments(n) @ _vals2coeffs(n)
    w.setflags(write=False)
    return w


@functools.lru_cache(maxsize=None)
def diffmat(n: int) -> np.ndarray:
    """Spectral differentiation matrix on ``chebpts(n)``."""
    x = chebpts(n)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    d -= np.diag(d.sum(axis=1))
    d.setflags(write=False)
    return d


@functools.lru_cache(maxsize=None)
def _gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(m)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def bary_matrix(n: int, x: np.ndarray) -> np.ndarray:
    """Barycentric interpolation matrix from ``chebpts(n)`` to points ``x``."""
    x = np.atleast_1d(np.asarray(x))
    nodes = chebpts(n)
    w = _bary_weights(n)
    diff = x[:, None] - nodes[None, :]
    hit = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = w[None, :] / diff
        mat = r / r.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    if rows.any():
        mat[rows] = hit[rows].astype(float)
    return mat


@functools.lru_cache(maxsize=None)
def _gl_interp(n: int, m: int) -> np.ndarray:
    t, _ = _gauss_legendre(m)
    mat = bary_matrix(n, t)
    mat.setflags(write=False)
    return mat


def _bernstein_rho(zeta: np.ndarray) -> np.ndarray:
    s = np.sqrt(zeta - 1) * np.sqrt(zeta + 1)
    return np.maximum(np.abs(zeta + s), np.abs(zeta - s))


def _log_kernel(zeta: np.ndarray) -> np.ndarray:
    """``int_{-1}^{1} dtau / (tau - zeta)`` off the interval."""
    return np.log((zeta - 1) / (zeta + 1))


def reference_cauchy_rows(
    n: int, zeta: np.ndarray, log_term: np.ndarray | None = None
) -> np.ndarray:
    """Rows ``R`` with ``(1/2 pi i) int_{-1}^{1} f(tau)/(tau - zeta) dtau = R @ f``.

    Parameters
    ----------
    n : int
        Number of Chebyshev points carrying the node values ``f``.
    zeta : ndarray
        Target points in the reference plane.
    log_term : ndarray, optional
        Value to use for ``int dtau / (tau - zeta)``.  Supplying it selects
        boundary values (interior points) or finite parts (endpoints);
        when omitted the targets must lie off ``[-1, 1]``.

    Returns
    -------
    ndarray of shape (len(zeta), n)
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    out = np.empty((zeta.size, n), dtype=complex)
    if log_term is None:
        rho = _bernstein_rho(zeta)
        far = n * np.log(rho) > np.log(_RECURRENCE_GROWTH)
        log_term = np.zeros_like(zeta)
        near = ~far
        log_term[near] = _log_kernel(zeta[near])
    else:
        log_term = np.broadcast_to(np.asarray(log_term, dtype=complex), zeta.shape)
        far = np.zeros(zeta.shape, dtype=bool)
        near = ~far
    if near.any():
        z = zeta[near]
        q = np.empty((z.size, n), dtype=complex)
        q[:, 0] = log_term[near]
        if n > 1:
            q[:, 1] = 2.0 + z * q[:, 0]
        mom = _moments(n)
        for k in range(1, n - 1):
            q[:, k + 1] = 2.0 * z * q[:, k] - q[:, k - 1] + 2.0 * mom[k]
        out[near] = (q @ _vals2coeffs(n)) / TWO_PI_I
    if far.any():
        m = 2 * n + 8
        t, w = _gauss_legendre(m)
        kern = w[None, :] / (t[None, :] - zeta[far][:, None])
        out[far] = (kern @ _gl_interp(n, m)) / TWO_PI_I
    return out


# ---------------------------------------------------------------------------
# Contour pieces
# ---------------------------------------------------------------------------


class ContourPiece:
    """Common interface of the three piece kinds."""

    n: int

    def points(self) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def closed(self) -> bool:
        return False


@dataclass(frozen=True)
class Segment(ContourPiece):
    """Oriented straight segment from ``a`` to ``b``."""

    a: complex
    b: complex
    n: int

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("segment endpoints must be distinct")
        if self.n < 2:
            raise ValueError("segments need n >= 2")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))

    @property
    def n_cheb(self) -> int:
        return self.n

    @property
    def scale(self) -> complex:
        """Derivative of the map, also the local scale at both ends."""
        return (self.b - self.a) / 2

    def map(self, tau):
        return (self.a + self.b) / 2 + self.scale * np.asarray(tau)

    def reference(self, z):
        return (np.asarray(z, dtype=complex) - (self.a + self.b) / 2) / self.scale

    def tangent(self, tau=None) -> complex:
        d = self.b - self.a
        return d / abs(d)

    @property
    def start(self) -> complex:
        return self.a

    @property
    def end(self) -> complex | None:
        return self.b

    def end_scale(self, which: str) -> complex:
        return self.b - self.a

    def points(self) -> np.ndarray:
        return self.map(chebpts(self.n))

    def with_n(self, n: int) -> "Segment":
        return Segment(self.a, self.b, n)

    def length(self) -> float:
        return abs(self.b - self.a)


@dataclass(frozen=True)
class Ray(ContourPiece):
    """Ray ``base + e^{i angle} r``, ``r >= 0``, under a Moebius map.

    ``s(tau) = base + e^{i angle} L (1 + tau)/(1 - tau)`` with ``L = scale``.
    The ``n`` nodes are the first ``n`` of ``n + 1`` Chebyshev points; the
    dropped node is the point at infinity, where densities vanish.
    """

    base: complex
    angle: float
    n: int
    scale: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.angle):
            raise ValueError("ray angle must be finite")
        if self.scale <= 0:
            raise ValueError("ray scale must be positive")
        if self.n < 2:
            raise ValueError("rays need n >= 2")
        object.__setattr__(self, "base", complex(self.base))

    @property
    def direction(self) -> complex:
        return complex(np.exp(1j * self.angle))

    @property
    def n_cheb(self) -> int:
        return self.n + 1

    def map(self, tau):
        tau = np.asarray(tau)
        with np.errstate(divide="ignore"):
            return self.base + self.direction * self.scale * (1 + tau) / (1 - tau)

    def reference(self, z):
        w = (np.asarray(z, dtype=complex) - self.base) / (self.direction * self.scale)
        return (w - 1) / (w + 1)

    def jacobian(self, tau):
        tau = np.asarray(tau)
        return 2 * self.direction * self.scale / (1 - tau) ** 2

    def tangent(self, tau=None) -> complex:
        return self.direction

    @property
    def start(self) -> complex:
        return self.base

    @property
    def end(self) -> None:
        return None

    def end_scale(self, which: str) -> complex:
        if which != "start":
            raise ValueError("a ray has no finite end point")
        # tau + 1 ~ 2 (z - base) / (e^{i angle} L), mirroring a segment's b - a
        return self.direction * self.scale

    def points(self) -> np.ndarray:
        return self.map(chebpts(self.n + 1)[:-1])

    def with_n(self, n: int) -> "Ray":
        return Ray(self.base, self.angle, n, self.scale)


@dataclass(frozen=True)
class Circle(ContourPiece):
    """Circle of given centre and radius; ``orientation`` +1 is counterclockwise.

    Nodes sit at geometric angles ``orientation * 2 pi j / n``; ``n`` is
    rounded up to an odd number so the Laurent modes split symmetrically.
    """

    center: complex
    radius: float
    n: int
    orientation: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if self.n < 3:
            raise ValueError("circles need n >= 3")
        if self.n % 2 == 0:
            object.__setattr__(self, "n", self.n + 1)
        object.__setattr__(self, "center", complex(self.center))

    @property
    def closed(self) -> bool:
        return True

    def angles(self) -> np.ndarray:
        return self.orientation * 2 * np.pi * np.arange(self.n) / self.n

    def points(self) -> np.ndarray:
        return self.center + self.radius * np.exp(1j * self.angles())

    def with_n(self, n: int) -> "Circle":
        return Circle(self.center, self.radius, n, self.orientation)

    def modes(self) -> np.ndarray:
        half = (self.n - 1) // 2
        return np.arange(-half, half + 1)

    def dft(self) -> np.ndarray:
        """Matrix mapping node values to Laurent coefficients."""
        m = self.modes()
        return np.exp(-1j * m[:, None] * self.angles()[None, :]) / self.n

    def length(self) -> float:
        return 2 * np.pi * self.radius


# ---------------------------------------------------------------------------
# Basic operations
# ---------------------------------------------------------------------------


def collocation_points(piece: ContourPiece) -> np.ndarray:
    """Collocation points of a piece, ordered along its orientation."""
    return piece.points()


def _on_piece_reference(piece: ContourPiece, z: np.ndarray, tol: float) -> np.ndarray:
    """Reference parameter of points on a segment or ray, validated."""
    zeta = piece.reference(z)
    if isinstance(piece, Segment):
        off = np.abs(zeta.imag) * abs(piece.scale) > tol
        off |= np.abs(zeta.real) > 1 + tol / abs(piece.scale)
    else:
        r = (z - piece.base) / piece.direction
        off = (np.abs(r.imag) > tol) | (r.real < -tol)
    if np.any(off):
        raise DomainError("interpolation point lies off the piece")
    return np.clip(zeta.real, -1.0, 1.0)


def interpolation_matrix(piece: ContourPiece, z, tol: float = 1e-10) -> np.ndarray:
    """Matrix evaluating the node interpolant at points ``z`` on the piece."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if isinstance(piece, Circle):
        w = (z - piece.center) / piece.radius
        if np.any(np.abs(np.abs(w) - 1) > tol / piece.radius):
            raise DomainError("interpolation point lies off the circle")
        phases = w[:, None] ** piece.modes()[None, :]
        return phases @ piece.dft()
    tau = _on_piece_reference(piece, z, tol)
    mat = bary_matrix(piece.n_cheb, tau)
    return mat[:, : piece.n]


def interpolate(piece: ContourPiece, values, z, tol: float = 1e-10):
    """Evaluate the interpolant through node values at points on the piece.

    Parameters
    ----------
    piece : ContourPiece
    values : array_like, shape (n, ...)
        Node values (scalars or matrices).
    z : complex or array_like
        Points on the piece.
    tol : float
        Distance tolerance for deciding that ``z`` lies on the piece.

    Raises
    ------
    DomainError
        If some ``z`` is off the piece.
    """
    values = np.asarray(values)
    scalar = np.ndim(z) == 0
    mat = interpolation_matrix(piece, z, tol)
    out = np.tensordot(mat, values, axes=(1, 0))
    return out[0] if scalar else out


def quadrature_weights(piece: ContourPiece) -> np.ndarray:
    """Weights ``w`` with ``int_piece f(s) ds ~ w @ f(nodes)``."""
    if isinstance(piece, Segment):
        return cc_weights(piece.n) * piece.scale
    if isinstance(piece, Circle):
        ang = piece.angles()
        return (
            1j * piece.radius * np.exp(1j * ang) * (2 * np.pi / piece.n) * piece.orientation
        )
    m = 2 * piece.n_cheb + 10
    t, w = _gauss_legendre(m)
    return (w * piece.jacobian(t)) @ _gl_interp(piece.n_cheb, m)[:, : piece.n]


def integrate(piece: ContourPiece, values) -> np.ndarray:
    """Integral of the interpolated density along the oriented piece.

    Raises
    ------
    NonIntegrableError
        For a ray whose interpolant does not vanish to second order at
        infinity, so that the mapped integrand would not be integrable.
    """
    values = np.asarray(values)
    if isinstance(piece, Ray):
        full = np.concatenate([values, np.zeros((1,) + values.shape[1:])])
        slope = np.tensordot(diffmat(piece.n_cheb)[-1], full, axes=(0, 0))
        size = np.max(np.abs(values)) if values.size else 0.0
        if np.max(np.abs(slope)) > 0.05 * max(size, 1e-300):
            raise NonIntegrableError("ray density does not decay fast enough")
    return np.tensordot(quadrature_weights(piece), values, axes=(0, 0))


def differentiate(piece: Segment, values) -> np.ndarray:
    """Derivative with respect to arc parameter ``s`` of a segment density."""
    if not isinstance(piece, Segment):
        raise TypeError("differentiation is implemented for segments only")
    values = np.asarray(values)
    return np.tensordot(diffmat(piece.n), values, axes=(1, 0)) / piece.scale


# ---------------------------------------------------------------------------
# Cauchy transforms
# ---------------------------------------------------------------------------


def _circle_rows(piece: Circle, z: np.ndarray, region: np.ndarray) -> np.ndarray:
    """Cauchy rows of a circle; ``region`` True selects the interior formula."""
    w = (z - piece.center) / piece.radius
    m = piece.modes()
    pos = m >= 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        powers = w[:, None] ** m[None, :]
    coef = np.where(region[:, None], powers * pos[None, :], -powers * (~pos)[None, :])
    coef = np.nan_to_num(coef, nan=0.0, posinf=0.0, neginf=0.0)
    return piece.orientation * (coef @ piece.dft())


def off_matrix(piece: ContourPiece, z) -> np.ndarray:
    """Rows evaluating the Cauchy transform of the piece density at ``z``.

    ``z`` must lie off the piece; no check is done here.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if isinstance(piece, Circle):
        inside = np.abs(z - piece.center) < piece.radius
        return _circle_rows(piece, z, inside)
    zeta = piece.reference(z)
    if isinstance(piece, Segment):
        return reference_cauchy_rows(piece.n, zeta)
    rows = reference_cauchy_rows(piece.n_cheb, zeta)
    # Moebius identity ds/(s - z) = dtau/(tau - zeta) - dtau/(tau - 1)
    at_inf = reference_cauchy_rows(piece.n_cheb, np.array([1.0 + 0j]), np.array([0j]))
    return (rows - at_inf)[:, : piece.n]


def _distance_to_piece(piece: ContourPiece, z: np.ndarray) -> np.ndarray:
    if isinstance(piece, Circle):
        return np.abs(np.abs(z - piece.center) - piece.radius)
    if isinstance(piece, Segment):
        d = piece.b - piece.a
        s = np.clip(((z - piece.a) * np.conj(d)).real / abs(d) ** 2, 0, 1)
        return np.abs(z - (piece.a + s * d))
    r = (z - piece.base) / piece.direction
    s = np.maximum(r.real, 0)
    return np.abs(r - s)


def cauchy_off(
    pieces: Sequence[ContourPiece], densities: Sequence[np.ndarray], z, tol: float = 1e-12
):
    """Cauchy transform of a piecewise density at points off the contour.

    Raises
    ------
    DomainError
        If a target lies within ``tol`` of the contour; use
        :func:`cauchy_boundary` there instead.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    total = None
    for piece, dens in zip(pieces, densities):
        dens = np.asarray(dens)
        if np.any(_distance_to_piece(piece, z) <= tol * (1 + np.abs(z))):
            raise DomainError("target on the contour: use cauchy_boundary")
        part = np.tensordot(off_matrix(piece, z), dens, axes=(1, 0))
        total = part if total is None else total + part
    if total is None:
        return 0.0 if scalar else np.zeros(z.shape, dtype=complex)
    return total[0] if scalar else total


def _start_log(scale: complex, omega: complex) -> complex:
    """Finite part of the log kernel at a piece start approached along ``omega``."""
    phi = np.angle(omega / scale)
    psi = np.pi - phi if phi > 0 else -np.pi - phi
    return np.log(abs(scale)) + 1j * psi


def _end_log(scale: complex, omega: complex) -> complex:
    """Finite part of the log kernel at a piece end approached along ``omega``."""
    return -np.log(abs(scale)) + 1j * np.angle(omega / scale)


def _same_point(z1: complex, z2: complex | None) -> bool:
    return z2 is not None and abs(z1 - z2) <= 1e-12 * (1 + abs(z1))


def _approach_direction(piece: ContourPiece, tau: float, sign: int) -> complex:
    """Direction from a point of ``piece`` into the region on side ``sign``."""
    t = piece.tangent(tau)
    if tau <= -1:
        return t * np.exp(1j * sign * _SIDE_ANGLE)
    if tau >= 1:
        return -t * np.exp(-1j * sign * _SIDE_ANGLE)
    return 1j * sign * t


def boundary_rows(
    pieces: Sequence[ContourPiece], index: int, tau, side: int
) -> list[np.ndarray]:
    """Boundary-value rows at points of piece ``index``.

    Parameters
    ----------
    pieces : sequence of ContourPiece
    index : int
        Piece carrying the targets.
    tau : array_like
        Reference parameters of the targets (angles for circles).  Values
        ``-1`` and ``1`` denote segment endpoints.
    side : {+1, -1}
        ``+1`` is the left of the orientation.

    Returns
    -------
    list of ndarray
        One block of rows per source piece, shape ``(len(tau), n_source)``.
    """
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    target = pieces[index]
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if isinstance(target, Circle):
        zt = target.center + target.radius * np.exp(1j * tau)
    else:
        zt = target.map(tau)
    blocks = []
    for j, src in enumerate(pieces):
        if isinstance(src, Circle):
            if j == index:
                inside = np.full(zt.shape, (side == 1) == (src.orientation == 1))
                blocks.append(_circle_rows(src, zt, inside))
            else:
                blocks.append(off_matrix(src, zt))
            continue
        ncheb = src.n_cheb
        zeta = src.reference(zt)
        logs = np.full(zt.shape, np.nan + 0j)
        for i, (z, tt) in enumerate(zip(zt, tau)):
            if j == index:
                zeta[i] = tt
                if -1 < tt < 1:
                    logs[i] = np.log((1 - tt) / (1 + tt)) + 1j * np.pi * side
                elif tt <= -1:
                    logs[i] = np.log(abs(src.end_scale("start"))) + 1j * np.pi * side
                else:
                    logs[i] = -np.log(abs(src.end_scale("end"))) + 1j * np.pi * side
                continue
            if isinstance(target, Circle):
                continue
            if _same_point(z, src.start):
                zeta[i] = -1.0
                omega = _approach_direction(target, tt, side)
                logs[i] = _start_log(src.end_scale("start"), omega)
            elif _same_point(z, src.end):
                zeta[i] = 1.0
                omega = _approach_direction(target, tt, side)
                logs[i] = _end_log(src.end_scale("end"), omega)
        special = ~np.isnan(logs)
        rows = np.empty((zt.size, ncheb), dtype=complex)
        if special.any():
            rows[special] = reference_cauchy_rows(ncheb, zeta[special], logs[special])
        if (~special).any():
            rows[~special] = reference_cauchy_rows(ncheb, zeta[~special])
        if isinstance(src, Ray):
            at_inf = reference_cauchy_rows(ncheb, np.array([1.0 + 0j]), np.array([0j]))
            rows = rows - at_inf
        blocks.append(rows[:, : src.n])
    return blocks


def node_parameters(piece: ContourPiece) -> np.ndarray:
    """Reference parameters (or angles) of the collocation nodes."""
    if isinstance(piece, Circle):
        return piece.angles()
    return chebpts(piece.n_cheb)[: piece.n]


def boundary_matrix(pieces: Sequence[ContourPiece], side: int) -> np.ndarray:
    """Dense matrix of boundary values at all nodes from all node values."""
    blocks = [
        np.hstack(boundary_rows(pieces, i, node_parameters(p), side))
        for i, p in enumerate(pieces)
    ]
    return np.vstack(blocks)


def cauchy_boundary(
    pieces: Sequence[ContourPiece],
    densities: Sequence[np.ndarray],
    piece_index: int,
    point_index: int,
    side: str | int,
):
    """One-sided boundary value of the Cauchy transform at a collocation node.

    Parameters
    ----------
    side : {'+', '-', 1, -1}
        ``'+'`` is the left of the piece orientation.
    """
    sign = {"+": 1, "-": -1, 1: 1, -1: -1}.get(side)
    if sign is None:
        raise ValueError("side must be '+' or '-'")
    tau = node_parameters(pieces[piece_index])[point_index]
    blocks = boundary_rows(pieces, piece_index, [tau], sign)
    total = 0
    for block, dens in zip(blocks, densities):
        total = total + np.tensordot(block[0], np.asarray(dens), axes=(0, 0))
    return total
