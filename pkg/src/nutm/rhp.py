"""Riemann-Hilbert problems for the half-line NLS solution and their deformations.

The solution ``Phi(k; x, t)`` is sectionally analytic in the quadrants
``Q1..Q4`` with transitions

    Phi_Q1 = Phi_Q2 J1 on iR+,   Phi_Q3 = Phi_Q2 J2 on R-,
    Phi_Q3 = Phi_Q4 J3 on iR-,   Phi_Q1 = Phi_Q4 J4 on R+,

and ``Phi -> I`` at infinity.  Here ``J4 = M P`` and ``J2 = U D L`` with
triangular factors built from ``gamma, Gamma`` and ``E = exp(2i theta)``,
``theta = k x + 2 k^2 t``.

Every contour used here is described by a partition of the plane into
regions.  A region carries a section ``Q`` (the quadrant whose ``Phi`` is
continued into it) and a gauge ``G``; the unknown there is ``Phi_Q G``.
Across an edge with region ``l`` on its left and ``r`` on its right the
jump is therefore ``G_r^{-1} T(Q_r -> Q_l) G_l`` where
``Phi_{Q_l} = Phi_{Q_r} T``.  Deformations only change the regions, and
edge jumps follow mechanically, which keeps the undeformed, steepest
descent and lensed contours consistent by construction.

Orientation convention: the ``+`` side of a piece is its left.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .boundary import GammaPair
from .chebyshev import (
    Circle,
    ContourPiece,
    Ray,
    Segment,
    boundary_rows,
    cauchy_off,
    quadrature_weights,
)
from .exceptions import ConfigError, UnsupportedConfiguration

logger = logging.getLogger(__name__)

__all__ = [
    "PhaseParams",
    "JumpFactors",
    "DeltaFunction",
    "JumpPiece",
    "RHProblem",
    "Region",
    "build_delta",
    "build_undeformed",
    "build_deformed",
    "deform_steepest",
    "deform_conjugate_lens",
    "build_smallxt",
    "build_rhp",
    "convert_residues",
    "truncate",
    "tolerances",
    "select_pipeline",
]

DEFAULT_TRUNC_TOL = 1e-9
DEFAULT_RADIUS = 50.0
DEFAULT_N = 24
T_MIN = 0.05
K0_MIN = -40.0
_EPS_CAP = 0.2
_EPS_MIN = 1e-3
# Collocation nodes per oscillation of E on a piece.
_NODES_PER_OSC = 6.0
_MAX_SPLIT = 32


def tolerances() -> tuple[float, float]:
    """Truncation tolerance and radius, with environment overrides."""
    tol = float(os.environ.get("NUTM_TRUNC_TOL", DEFAULT_TRUNC_TOL))
    radius = float(os.environ.get("NUTM_RADIUS", DEFAULT_RADIUS))
    if not (tol > 0 and radius > 0):
        raise ConfigError("truncation tolerance and radius must be positive")
    return tol, radius


# ---------------------------------------------------------------------------
# Small matrix helpers
# ---------------------------------------------------------------------------


def _mat(a, b, c, d) -> np.ndarray:
    a, b, c, d = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (a, b, c, d)))
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = c
    out[..., 1, 1] = d
    return out


def _inv2(m: np.ndarray) -> np.ndarray:
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    return _mat(m[..., 1, 1], -m[..., 0, 1], -m[..., 1, 0], m[..., 0, 0]) / det[..., None, None]


def _eye(shape) -> np.ndarray:
    return _mat(np.ones(shape), 0, 0, 1)


def _times_exp(coef, expo) -> np.ndarray:
    """``coef * exp(expo)`` with exact zeros where ``coef`` vanishes."""
    coef = np.asarray(coef, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        val = coef * np.exp(expo)
    return np.where(coef == 0, 0.0, val)


def _norm2(m: np.ndarray) -> np.ndarray:
    """Spectral norms of a stack of 2x2 matrices."""
    return np.linalg.svd(m, compute_uv=False)[..., 0]


# ---------------------------------------------------------------------------
# Phase and jump factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseParams:
    """Evaluation point ``(x, t)`` and the phase ``theta = k x + 2 k^2 t``."""

    x: float
    t: float

    def __post_init__(self):
        if self.x < 0 or self.t < 0:
            raise ConfigError("x and t must be nonnegative")

    @property
    def k0(self) -> float:
        """Stationary point ``-x/(4t)`` of ``theta``."""
        if self.t == 0:
            return -np.inf if self.x > 0 else 0.0
        return -self.x / (4 * self.t)

    def theta(self, k):
        k = np.asarray(k, dtype=complex)
        return k * self.x + 2 * k**2 * self.t

    def exponent(self, k):
        """``2i theta``, in completed-square form when ``t > 0``."""
        k = np.asarray(k, dtype=complex)
        if self.t == 0:
            return 2j * k * self.x
        return 4j * self.t * (k - self.k0) ** 2 - 1j * self.x**2 / (4 * self.t)

    def E(self, k):
        with np.errstate(over="ignore"):
            return np.exp(self.exponent(k))


class JumpFactors:
    """Triangular factors and quadrant transitions for a ``GammaPair``."""

    def __init__(
        self,
        pair: GammaPair,
        phase: PhaseParams,
        delta: "DeltaFunction | None" = None,
        rational: "JumpFactors | None" = None,
    ):
        self.pair = pair
        self.phase = phase
        self.delta = delta
        self.rational = rational
        self.lam = pair.lam

    def P(self, k):
        e = self.phase.exponent(k)
        return _mat(1, 0, _times_exp(self.lam * self.pair.gamma_star(k), e), 1)

    def M(self, k):
        e = self.phase.exponent(k)
        return _mat(1, _times_exp(self.pair.gamma(k), -e), 0, 1)

    def U(self, k):
        e = self.phase.exponent(k)
        return _mat(1, _times_exp(-self.pair.rho(k) / self.pair.tau(k), -e), 0, 1)

    def L(self, k):
        e = self.phase.exponent(k)
        return _mat(1, 0, _times_exp(-self.pair.rho_tilde(k) / self.pair.tau(k), e), 1)

    def D(self, k):
        tau = self.pair.tau(k)
        return _mat(1 / tau, 0, 0, tau)

    def J1(self, k):
        e = self.phase.exponent(k)
        return _mat(1, 0, _times_exp(-self.pair.Gamma(k), e), 1)

    def J3(self, k):
        e = self.phase.exponent(k)
        return _mat(1, _times_exp(-self.lam * self.pair.Gamma_star(k), -e), 0, 1)

    def J4(self, k):
        return self.M(k) @ self.P(k)

    def Lrho(self, k):
        e = self.phase.exponent(k)
        return _mat(1, 0, _times_exp(-self.pair.rho_tilde(k), e), 1)

    def Urho(self, k):
        e = self.phase.exponent(k)
        return _mat(1, _times_exp(self.pair.rho(k), -e), 0, 1)

    def J2(self, k):
        return self.U(k) @ self.D(k) @ self.L(k)

    def transition(self, qa: str, qb: str, k) -> np.ndarray:
        """``T`` with ``Phi_qb = Phi_qa T``."""
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        if qa == qb:
            return _eye(k.shape)
        basic = {("Q2", "Q1"): self.J1, ("Q2", "Q3"): self.J2, ("Q4", "Q3"): self.J3, ("Q4", "Q1"): self.J4}
        if (qa, qb) in basic:
            return basic[(qa, qb)](k)
        if (qb, qa) in basic:
            return _inv2(basic[(qb, qa)](k))
        via = "Q2" if "Q1" in (qa, qb) else "Q4"
        return self.transition(qa, via, k) @ self.transition(via, qb, k)

    def factor(self, name: str, k, side: int) -> np.ndarray:
        if name.startswith("r:"):
            return self.rational.factor(name[2:], k, side)
        if name == "Dinv":
            d = self.delta(k, side)
            return _mat(1 / d, 0, 0, d)
        if name.endswith("inv"):
            return _inv2(getattr(self, name[:-3])(k))
        return getattr(self, name)(k)

    def gauge(self, region: "Region", k) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        g = _eye(k.shape)
        for name in region.factors:
            g = g @ self.factor(name, k, region.side)
        return g


# ---------------------------------------------------------------------------
# delta
# ---------------------------------------------------------------------------


class DeltaFunction:
    """``delta(k) = exp((1/2 pi i) int_{-inf}^{k0} log tau(s) / (s - k) ds)``.

    ``delta`` is analytic off ``(-inf, k0]`` with ``delta_+ = delta_- tau``
    there (``+`` from above), and ``delta -> 1 + delta1/k`` at infinity.
    The density ``log tau`` is sampled on a mapped Chebyshev ray with the
    continuous branch fixed by ``log tau(-inf) = 0``.
    """

    def __init__(self, k0: float, tau: Callable, n: int | None = None, scale: float = 2.0, tol: float = 1e-12):
        self.k0 = float(k0)
        self.tau = tau
        sizes = [n] if n is not None else [64, 128, 256, 512, 1024]
        probes = self.k0 + np.array([0.5 + 0.5j, -2 + 0.3j, 1 - 1j, -5 - 2j])
        prev = None
        for size in sizes:
            ray, dens = self._density(size, scale)
            vals = np.exp(-cauchy_off([ray], [dens], probes))
            if prev is not None and np.max(np.abs(vals - prev)) < tol:
                break
            prev = vals
        self.ray, self.density = ray, dens
        self.n = ray.n
        # delta1 = (1/2 pi i) int_ray log tau ds with the ray oriented outward
        # log tau = O(s^-2), so plain mapped quadrature is adequate
        self.delta1 = complex(quadrature_weights(ray) @ dens) / (2j * np.pi)

    def _density(self, n: int, scale: float):
        ray = Ray(self.k0, np.pi, n, scale)
        vals = np.asarray(self.tau(ray.points()), dtype=complex)
        if not np.all(np.isfinite(vals)) or np.min(np.abs(vals)) < 1e-12:
            raise UnsupportedConfiguration("tau vanishes on (-inf, k0]")
        # unwrap from the far end, where tau -> 1
        ang = np.unwrap(np.angle(vals)[::-1])[::-1]
        return ray, np.log(np.abs(vals)) + 1j * ang

    def __call__(self, k, side: int = 1) -> np.ndarray:
        """Evaluate ``delta``; points on the cut take the value from ``side``."""
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        out = np.empty(k.shape, dtype=complex)
        on_cut = (np.abs(k.imag) <= 1e-12 * (1 + np.abs(k))) & (k.real < self.k0)
        if (~on_cut).any():
            out[~on_cut] = np.exp(-cauchy_off([self.ray], [self.density], k[~on_cut]))
        if on_cut.any():
            tau_par = self.ray.reference(k[on_cut]).real
            # above the real axis is the right of the leftward ray
            rows = boundary_rows([self.ray], 0, tau_par, -side)[0]
            out[on_cut] = np.exp(-(rows @ self.density))
        return out


def build_delta(pair: GammaPair, k0: float, n: int | None = None) -> DeltaFunction:
    """``DeltaFunction`` for ``tau = 1 + rho rho_tilde`` of ``pair``."""
    return DeltaFunction(k0, pair.tau, n=n)


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------


class Region(NamedTuple):
    section: str
    factors: tuple = ()
    side: int = 1


@dataclass
class JumpPiece:
    """A contour piece with its jump matrix function."""

    geometry: ContourPiece
    jump: Callable
    label: str = ""
    info: dict = field(default_factory=dict)

    def max_deviation(self, m: int = 101) -> float:
        pts = _sample_points(self.geometry, m)
        return float(np.max(_norm2(self.jump(pts) - np.eye(2))))


@dataclass
class RHProblem:
    """Collection of jump pieces plus the data needed to read off ``q``.

    ``f1`` is the ``1/k`` coefficient of the scalar ``f`` with
    ``Phi = Psi diag(f, 1/f)`` near infinity, where ``Psi`` is the solution
    of this problem; it collects the ``delta`` and pole conjugations.
    """

    pieces: list
    phase: PhaseParams
    lam: int
    pipeline: str
    f1: complex = 0.0
    records: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def diagnostics(self) -> list[dict]:
        out = []
        for p in self.pieces:
            rec = {"label": p.label, "geometry": _geometry_record(p.geometry), "n": p.geometry.n}
            rec.update({k: v for k, v in p.info.items() if isinstance(v, (int, float, str))})
            out.append(rec)
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "x": self.phase.x,
                "t": self.phase.t,
                "lambda": self.lam,
                "pipeline": self.pipeline,
                "pieces": self.diagnostics(),
                "truncation": self.records,
            },
            indent=2,
        )


def _geometry_record(g: ContourPiece) -> dict:
    if isinstance(g, Segment):
        return {"kind": "segment", "a": [g.a.real, g.a.imag], "b": [g.b.real, g.b.imag]}
    if isinstance(g, Ray):
        return {"kind": "ray", "base": [g.base.real, g.base.imag], "angle": g.angle}
    return {"kind": "circle", "center": [g.center.real, g.center.imag], "radius": g.radius}


def _sample_points(g: ContourPiece, m: int, r_max: float = 60.0) -> np.ndarray:
    if isinstance(g, Segment):
        return g.a + (g.b - g.a) * np.linspace(0, 1, m)
    if isinstance(g, Ray):
        return g.base + g.direction * np.linspace(0, r_max, m)
    return g.center + g.radius * np.exp(2j * np.pi * np.arange(m) / m)


def _distance(g: ContourPiece, z: complex) -> float:
    if isinstance(g, Circle):
        return abs(abs(z - g.center) - g.radius)
    if isinstance(g, Segment):
        d = g.b - g.a
        s = np.clip(((z - g.a) * np.conj(d)).real / abs(d) ** 2, 0, 1)
        return abs(z - (g.a + s * d))
    r = (z - g.base) / g.direction
    return abs(r - max(r.real, 0.0))


# ---------------------------------------------------------------------------
# Region layouts
# ---------------------------------------------------------------------------


def _quadrant(k: complex) -> str:
    if k.imag > 0:
        return "Q1" if k.real > 0 else "Q2"
    return "Q4" if k.real > 0 else "Q3"


class _Notch(NamedTuple):
    """Square of half-side ``half`` around a pole lying on a contour.

    Inside, regions are those at ``target``, which makes the pole removable.
    """

    center: complex
    half: float
    target: complex

    def contains(self, k: complex) -> bool:
        d = k - self.center
        return abs(d.real) < self.half and abs(d.imag) < self.half


class _Layout:
    notches: tuple = ()

    def classify(self, k: complex) -> Region:
        for nt in self.notches:
            if nt.contains(k):
                return self._classify(nt.target)
        return self._classify(k)

    def _classify(self, k: complex) -> Region:  # pragma: no cover - abstract
        raise NotImplementedError


class _CrossLayout(_Layout):
    def _classify(self, k):
        return Region(_quadrant(k), (), 1 if k.imag > 0 else -1)


@dataclass
class _DeformedLayout(_Layout):
    k0: float
    a_left: float
    a_right: float
    h: float
    use_delta: bool
    mode: str = "ray"
    notches: tuple = ()
    j1_angle: float = np.pi / 4

    def _classify(self, k):
        d = k - self.k0
        up = k.imag > 0
        side = 1 if up else -1
        y = abs(k.imag)
        if self.h > 0 and abs(d.real) < self.h and y < self.h:
            return Region(_quadrant(k), (), side)
        dinv = ("Dinv",) if self.use_delta else ()
        if d.real > 0 and y < min(self.a_right, d.real):
            return Region("Q1", ("Pinv",) + dinv, 1) if up else Region("Q4", ("M",) + dinv, -1)
        if d.real < 0 and y < min(self.a_left, -d.real):
            return Region("Q2", ("U",) + dinv, 1) if up else Region("Q3", ("Linv",) + dinv, -1)
        if self.mode == "ray":
            if y < self.a_right:
                right = y < d.real
            else:
                corner = self.a_right * (1 + 1j)
                right = ((complex(d.real, y) - corner) * np.exp(-1j * self.j1_angle)).imag < 0
        else:
            right = k.real > 0
        if up:
            return Region("Q1" if right else "Q2", dinv, 1)
        return Region("Q4" if right else "Q3", dinv, -1)


def _split_axes(g: ContourPiece) -> list:
    """Split segments and rays where they cross the coordinate axes."""
    if isinstance(g, Circle):
        return [g]
    start = g.start
    direction = g.tangent()
    length = g.length() if isinstance(g, Segment) else np.inf
    cuts = []
    for comp in ("real", "imag"):
        s0 = getattr(start, comp)
        ds = getattr(direction, comp)
        if abs(ds) > 1e-14:
            r = -s0 / ds
            if 1e-12 < r < length - 1e-12:
                cuts.append(r)
    cuts = sorted(set(np.round(cuts, 14)))
    if not cuts:
        return [g]
    pts = [start] + [start + direction * r for r in cuts]
    out = [Segment(p, q, g.n) for p, q in zip(pts[:-1], pts[1:])]
    if isinstance(g, Segment):
        out.append(Segment(pts[-1], g.b, g.n))
    else:
        out.append(Ray(pts[-1], g.angle, g.n, g.scale))
    return out


def _probe_point(g: ContourPiece) -> tuple[complex, complex]:
    if isinstance(g, Segment):
        m = (g.a + g.b) / 2
        span = g.length()
    else:
        m = g.base + g.direction
        span = 1.0
    off = 1e-7 * min(1.0, span)
    return m + 1j * g.tangent() * off, m - 1j * g.tangent() * off


def _edge_jump(factors: JumpFactors, left: Region, right: Region) -> Callable:
    def jump(k):
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        gl = factors.gauge(left, k)
        gr = factors.gauge(right, k)
        return _inv2(gr) @ factors.transition(right.section, left.section, k) @ gl

    return jump


def _assemble(edges, layout: _Layout, factors: JumpFactors, n: int) -> list:
    pieces = []
    for label, g in edges:
        for part in _split_axes(g):
            pl, pr = _probe_point(part)
            left, right = layout.classify(pl), layout.classify(pr)
            if left == right:
                continue
            pieces.append(
                JumpPiece(
                    part.with_n(n),
                    _edge_jump(factors, left, right),
                    label,
                    {"left": left.section + "".join(left.factors), "right": right.section + "".join(right.factors)},
                )
            )
    return pieces


def _clip_box(g: ContourPiece, nt: _Notch) -> tuple[float, float] | None:
    """Arc-length interval of a segment or ray inside a notch (Liang-Barsky)."""
    start, d = g.start, g.tangent()
    lo, hi = 0.0, (g.length() if isinstance(g, Segment) else np.inf)
    c = nt.center
    for p0, dp, a, b in ((start.real, d.real, c.real - nt.half, c.real + nt.half), (start.imag, d.imag, c.imag - nt.half, c.imag + nt.half)):
        if abs(dp) < 1e-15:
            if not a < p0 < b:
                return None
            continue
        s1, s2 = sorted(((a - p0) / dp, (b - p0) / dp))
        lo, hi = max(lo, s1), min(hi, s2)
    return (lo, hi) if hi > lo + 1e-14 else None


def _notch_edges(edges: list, notches: Sequence[_Notch], n: int) -> list:
    """Cut the edges out of each notch and add the notch sides."""
    for nt in notches:
        out = []
        for label, g in edges:
            cut = None if isinstance(g, Circle) else _clip_box(g, nt)
            if cut is None:
                out.append((label, g))
                continue
            start, d = g.start, g.tangent()
            if cut[0] > 1e-14:
                out.append((label, Segment(start, start + d * cut[0], n)))
            if isinstance(g, Ray):
                out.append((label, Ray(start + d * cut[1], g.angle, n, g.scale)))
            elif cut[1] < g.length() - 1e-14:
                out.append((label, Segment(start + d * cut[1], g.b, n)))
        c, h = nt.center, nt.half
        corners = [c + h * w for w in (-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j)]
        out += [("notch", Segment(a, b, n)) for a, b in zip(corners, corners[1:] + corners[:1])]
        edges = out
    return edges


def _line_distance(g: ContourPiece, z: complex) -> float:
    if isinstance(g, Circle):
        return abs(abs(z - g.center) - g.radius)
    r = ((z - g.start) * np.conj(g.tangent())).real
    r = max(r, 0.0) if isinstance(g, Ray) else min(max(r, 0.0), g.length())
    return abs(z - (g.start + g.tangent() * r))


def _place_notches(pair: GammaPair, layout: _Layout, edges: list) -> tuple:
    """Notches for poles of ``Gamma`` that sit on a contour edge.

    Such poles occur on the imaginary axis when the boundary denominator
    has a zero there.  The notch is opened on the side whose gauge removes
    the pole, so no residue circle is needed.
    """
    notches = []
    targets = [(p, z, up) for p in pair.poles for z, up in ((p.z, True), (np.conj(p.z), False))]
    for p, z, up in targets:
        z = complex(z)
        dists = [_line_distance(g, z) for _, g in edges]
        if min(dists, default=np.inf) > 1e-9 * (1 + abs(z)):
            continue
        if p.source != "d" or not p.in_gamma:
            raise UnsupportedConfiguration(f"pole {z} lies on the contour")
        half = min([0.1, abs(z.imag) / 4] + [abs(z - w) / 3 for _, w, _ in targets if w != z])
        half = min([half] + [d / 2 for d in dists if d > 1e-9 * (1 + abs(z))])
        for shift in (half / 2, -half / 2):
            if _absorbed(p.source, True, layout._classify(z + shift), up):
                notches.append(_Notch(z, half, z + shift))
                break
        else:
            raise UnsupportedConfiguration(f"no side of the contour absorbs the pole at {z}")
    return tuple(notches)


def _with_notches(pair: GammaPair, layout: _Layout, edges: list, n: int) -> list:
    notches = _place_notches(pair, layout, edges)
    if not notches:
        return edges
    layout.notches = notches
    return _notch_edges(edges, notches, n)


def _cross_edges(n: int) -> list:
    return [
        ("R+", Ray(0, 0.0, n)),
        ("iR+", Ray(0, np.pi / 2, n)),
        ("R-", Ray(0, np.pi, n)),
        ("iR-", Ray(0, -np.pi / 2, n)),
    ]


def build_undeformed(pair: GammaPair, x: float, t: float, n: int = DEFAULT_N) -> RHProblem:
    """The four-ray cross with ``J1..J4`` (before residue conversion)."""
    phase = PhaseParams(x, t)
    factors = JumpFactors(pair, phase)
    layout = _CrossLayout()
    edges = _with_notches(pair, layout, _cross_edges(n), n)
    pieces = _assemble(edges, layout, factors, n)
    return RHProblem(pieces, phase, pair.lam, "undeformed", meta={"layout": layout, "factors": factors})


def _heights(pair: GammaPair, k0: float) -> tuple[float, float]:
    """Strip heights left and right of ``k0``.

    The right height starts at the analyticity height of ``gamma`` and is
    reduced by factors of 0.8 while a pole right of ``k0`` lies within
    ``0.2 Im z`` of the horizontal line or of the oblique segment below it.
    """
    a_left = float(pair.alpha_strip)
    a_right = float(pair.gamma_height)
    floor = a_right / 16

    def close(a):
        for p in pair.poles:
            d = p.z - k0
            y = abs(p.z.imag)
            near_oblique = y < a and abs(y - d.real) / np.sqrt(2) < 0.2 * y
            if d.real > 0 and (abs(y - a) < 0.2 * y or near_oblique):
                return True
        return False

    while close(a_right) and 0.8 * a_right >= floor:
        a_right *= 0.8
    return a_left, a_right


_J1_ANGLES = (np.pi / 4, np.pi / 6, np.pi / 3, np.pi / 8, 3 * np.pi / 8)


def _j1_angle(pair: GammaPair, corner: complex) -> float:
    """Direction of the ray from ``corner`` carrying the ``Gamma`` jump.

    The diagonal is used unless a pole lies closer to it than a quarter of
    its height; then the candidate keeping the poles farthest away (relative
    to their heights) is taken.
    """
    zs = [p.z for p in pair.poles if p.z.imag > corner.imag]

    def clearance(angle):
        g = Ray(corner, angle, 2)
        return min((_line_distance(g, z) / z.imag for z in zs), default=np.inf)

    if clearance(np.pi / 4) >= 0.25:
        return np.pi / 4
    return max(_J1_ANGLES, key=clearance)


def build_deformed(
    pair: GammaPair,
    x: float,
    t: float,
    lens: bool = True,
    n: int = DEFAULT_N,
    heights: tuple[float, float] | None = None,
    mode: str = "ray",
    delta: DeltaFunction | None = None,
) -> RHProblem:
    """Steepest-descent contour anchored at ``k0``, optionally lensed.

    Without ``lens`` the factorizations of ``J2`` and ``J4`` are opened onto
    rays from ``k0`` bent horizontal at the strip heights and ``D`` stays
    on ``(-inf, k0]``.  With ``lens`` the problem is conjugated by
    ``diag(delta, 1/delta)``, which removes ``D``, and a square of side
    ``min(1, t^{-1/2})`` (capped by the strip heights) centred at ``k0``
    keeps ``delta`` away from its singular point; inside the square the
    original quadrant jumps are kept.  ``mode='axis'`` keeps ``J1, J3`` on
    the imaginary axis for data whose ``Gamma`` is known there only.
    """
    if t <= 0:
        raise ConfigError("deformed contours need t > 0")
    if mode not in ("ray", "axis"):
        raise ConfigError("mode must be 'ray' or 'axis'")
    phase = PhaseParams(x, t)
    k0 = phase.k0
    a_l, a_r = heights if heights is not None else _heights(pair, k0)
    if not (a_l > 0 and a_r > 0):
        raise UnsupportedConfiguration("strip heights must be positive")
    h = 0.0
    if lens:
        h = min(min(1.0, t**-0.5) / 2, a_l, a_r)
        if delta is None:
            delta = build_delta(pair, k0)
    factors = JumpFactors(pair, phase, delta if lens else None)
    j1 = _j1_angle(pair, k0 + a_r * (1 + 1j)) if mode == "ray" else np.pi / 4
    layout = _DeformedLayout(k0, a_l, a_r, h, lens, mode, j1_angle=j1)
    edges = []
    for s in (1, -1):
        c_r = k0 + h * (1 + 1j * s)
        c_l = k0 + h * (-1 + 1j * s)
        r_r = k0 + a_r * (1 + 1j * s)
        r_l = k0 + a_l * (-1 + 1j * s)
        tag = "up" if s > 0 else "down"
        if a_r > h:
            edges.append((f"oblique-right-{tag}", Segment(c_r, r_r, n)))
        if a_l > h:
            edges.append((f"oblique-left-{tag}", Segment(c_l, r_l, n)))
        edges.append((f"horizontal-right-{tag}", Ray(r_r, 0.0, n)))
        edges.append((f"horizontal-left-{tag}", Ray(r_l, np.pi, n)))
        if mode == "ray":
            angle = s * j1
            edges.append(("J1-ray" if s > 0 else "J3-ray", Ray(r_r, angle, n)))
        else:
            y0 = 0.0
            if h > 0 and abs(k0) < h:
                y0 = h
            if k0 < 0:
                y0 = max(y0, min(a_r, -k0))
            edges.append(("J1-axis" if s > 0 else "J3-axis", Ray(1j * s * y0, s * np.pi / 2, n)))
    if h > 0:
        edges.append(("real-left", Ray(k0 - h, np.pi, n)))
        edges.append(("real-in", Segment(k0 - h, k0 + h, n)))
        c = [k0 + h * (1 - 1j), k0 + h * (1 + 1j), k0 + h * (-1 + 1j), k0 + h * (-1 - 1j)]
        sides = [(c[0], k0 + h), (k0 + h, c[1]), (c[1], c[2]), (c[2], k0 - h), (k0 - h, c[3]), (c[3], c[0])]
        edges += [(f"square-{i}", Segment(a, b, n)) for i, (a, b) in enumerate(sides)]
        if abs(k0) < h:
            edges += [("axis-in-up", Segment(0, 1j * h, n)), ("axis-in-down", Segment(0, -1j * h, n))]
    else:
        edges.append(("real-left", Ray(k0, np.pi, n)))
        edges.append(("real-right", Ray(k0, 0.0, n)))
    pieces = _assemble(edges, layout, factors, n)
    pipeline = "lensed" if lens else "steepest"
    f1 = delta.delta1 if (lens and delta is not None) else 0.0
    return RHProblem(
        pieces,
        phase,
        pair.lam,
        pipeline,
        f1=f1,
        meta={"layout": layout, "factors": factors, "delta": delta if lens else None, "heights": (a_l, a_r), "h": h},
    )


def deform_steepest(pair: GammaPair, x: float, t: float, **kw) -> RHProblem:
    """Open the lenses at ``k0`` without ``delta``; ``D`` stays on ``(-inf, k0]``."""
    return build_deformed(pair, x, t, lens=False, **kw)


def deform_conjugate_lens(pair: GammaPair, x: float, t: float, delta: DeltaFunction | None = None, **kw) -> RHProblem:
    """Conjugate by ``delta`` and add the lens square around ``k0``."""
    return build_deformed(pair, x, t, lens=True, delta=delta, **kw)


# ---------------------------------------------------------------------------
# Residue conditions
# ---------------------------------------------------------------------------


def _absorbed(source: str, in_gamma: bool, region: Region, upper: bool) -> bool:
    """Whether the gauge of ``region`` already removes the pole."""
    if not in_gamma:
        return False
    if source == "a":
        if upper:
            return region.section == "Q2" or "Pinv" in region.factors
        return region.section == "Q3" or "M" in region.factors
    if upper:
        return region.section == "Q1"
    return region.section == "Q4"


def convert_residues(
    rhp: RHProblem,
    pair: GammaPair,
    eps: float | None = None,
    n: int = DEFAULT_N,
) -> RHProblem:
    """Replace residue conditions by jumps on small circles.

    A pole needs a circle unless the gauge of its region already removes it.
    For ``|c e^{2i theta(z)}| > 1`` the circle jump is inverted and all
    other jumps are conjugated by ``V = diag(v, 1/v)``,
    ``v = prod (k - z_j)/(k - conj z_j)`` over inverted poles.
    """
    layout: _Layout = rhp.meta["layout"]
    factors: JumpFactors = rhp.meta["factors"]
    phase = rhp.phase
    lam = pair.lam
    entries = []
    for p in pair.poles:
        for upper in (True, False):
            z = p.z if upper else np.conj(p.z)
            region = layout.classify(z)
            if _absorbed(p.source, p.in_gamma, region, upper):
                continue
            ok = ("Dinv", "Pinv") if upper else ("Dinv", "M")
            # rational gauges are lower (upper) triangular above (below) the
            # axis and commute with the residue matrix there
            if any(f not in ok and not f.startswith("r:") for f in region.factors):
                raise UnsupportedConfiguration(f"pole {z} lies in a lens region")
            e = complex(phase.exponent(z))
            if upper:
                val = p.c * np.exp(e)
            else:
                val = -lam * np.conj(p.c) * np.exp(-e)
            if "Dinv" in region.factors:
                d = complex(factors.delta(np.array([z]), region.side)[0])
                val = val / d**2 if upper else val * d**2
            inverted = abs(p.c * np.exp(complex(phase.exponent(p.z)))) > 1
            entries.append({"z": complex(z), "upper": upper, "value": complex(val), "inverted": bool(inverted), "pole": p})
    if not entries:
        return rhp
    zs = [e["z"] for e in entries]
    radii = []
    for i, e in enumerate(entries):
        dists = [_distance(p.geometry, e["z"]) for p in rhp.pieces]
        dists += [abs(e["z"] - w) for j, w in enumerate(zs) if j != i]
        r = min([_EPS_CAP] + [0.5 * d for d in dists])
        if eps is not None:
            r = min(r, eps)
        if r < _EPS_MIN:
            raise UnsupportedConfiguration(f"no room for a residue circle at {e['z']}")
        radii.append(r)
    inv_poles = [e["z"] for e in entries if e["inverted"] and e["upper"]]

    def v(k):
        out = np.ones_like(k)
        for z in inv_poles:
            out = out * (k - z) / (k - np.conj(z))
        return out

    def conj_v(f):
        def g(k):
            k = np.atleast_1d(np.asarray(k, dtype=complex))
            vv = v(k)
            return _mat(1 / vv, 0, 0, vv) @ f(k) @ _mat(vv, 0, 0, 1 / vv)

        return g

    pieces = [JumpPiece(p.geometry, conj_v(p.jump), p.label, p.info) for p in rhp.pieces]
    for e, r in zip(entries, radii):
        z, val = e["z"], e["value"]
        if e["inverted"]:
            if e["upper"]:
                base = lambda k, z=z, val=val: _mat(1, -(k - z) / val, 0, 1)
            else:
                base = lambda k, z=z, val=val: _mat(1, 0, -(k - z) / val, 1)
        else:
            if e["upper"]:
                base = lambda k, z=z, val=val: _mat(1, 0, -val / (k - z), 1)
            else:
                base = lambda k, z=z, val=val: _mat(1, -val / (k - z), 0, 1)
        label = ("circle" if e["upper"] else "circle-conj") + ("-inverted" if e["inverted"] else "")
        pieces.append(JumpPiece(Circle(z, r, n), conj_v(lambda k, f=base: f(np.atleast_1d(np.asarray(k, dtype=complex)))), label, {"radius": r}))
    v1 = sum(np.conj(z) - z for z in inv_poles)
    meta = dict(rhp.meta)
    meta["circles"] = [{"z": e["z"], "inverted": e["inverted"], "radius": r} for e, r in zip(entries, radii)]
    return RHProblem(pieces, rhp.phase, rhp.lam, rhp.pipeline, rhp.f1 - v1, rhp.records, meta)


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------


def _clip_segment_to_disk(a: complex, b: complex, radius: float):
    """Part of segment ``[a, b]`` inside ``|k| <= radius`` (or None)."""
    d = b - a
    # |a + s d|^2 = radius^2
    A = abs(d) ** 2
    B = 2 * (np.conj(a) * d).real
    C = abs(a) ** 2 - radius**2
    disc = B * B - 4 * A * C
    if disc <= 0:
        return None
    s1 = (-B - np.sqrt(disc)) / (2 * A)
    s2 = (-B + np.sqrt(disc)) / (2 * A)
    lo, hi = max(0.0, s1), min(1.0, s2)
    if hi - lo <= 1e-12:
        return None
    return a + lo * d, a + hi * d


def truncate(
    rhp: RHProblem, trunc_tol: float | None = None, radius: float | None = None, spacing: float = 0.25
) -> RHProblem:
    """Drop negligible pieces, cut ray tails, and clip to the disk of ``radius``.

    Rays are scanned outward on a grid of the given ``spacing`` (refined
    near the cut) and cut after the last sample where
    ``||J - I||_2 >= trunc_tol``; everything is then clipped to
    ``|k| <= radius``.  One record per input piece notes the rule applied.
    """
    tol_default, radius_default = tolerances()
    trunc_tol = tol_default if trunc_tol is None else trunc_tol
    radius = radius_default if radius is None else radius
    pieces, records = [], []
    for p in rhp.pieces:
        g = p.geometry
        rec = {"label": p.label, "geometry": _geometry_record(g)}
        if isinstance(g, Circle):
            dev = p.max_deviation(2 * g.n + 1)
            rec.update(max_dev=dev, rule="kept" if dev >= trunc_tol else "dropped")
            if dev >= trunc_tol:
                pieces.append(p)
            records.append(rec)
            continue
        end = g.base + g.direction * 4 * (radius + abs(g.base)) if isinstance(g, Ray) else g.b
        clip = _clip_segment_to_disk(g.start, end, radius)
        if clip is None:
            rec.update(rule="outside-radius")
            records.append(rec)
            continue
        a, b = clip
        m = int(np.clip(np.ceil(abs(b - a) / spacing) + 1, 33, 801))
        pts = a + (b - a) * np.linspace(0, 1, m)
        dev = _norm2(p.jump(pts) - np.eye(2))
        if not np.all(np.isfinite(dev)):
            raise UnsupportedConfiguration(f"non-finite jump on piece {p.label}")
        big = np.nonzero(dev >= trunc_tol)[0]
        if big.size == 0:
            rec.update(max_dev=float(np.max(dev)), rule="dropped")
            records.append(rec)
            continue
        if isinstance(g, Ray) and big[-1] < m - 1:
            # refine between the last large sample and the next one
            last = big[-1]
            fine = pts[last] + (pts[last + 1] - pts[last]) * np.linspace(0, 1, 33)
            fdev = _norm2(p.jump(fine) - np.eye(2))
            pts = np.concatenate([pts[:last], fine])
            dev = np.concatenate([dev[:last], fdev])
            big = np.nonzero(dev >= trunc_tol)[0]
            m = pts.size
        rule = "radius" if (isinstance(g, Ray) or abs(b - g.b) > 1e-12 or abs(a - g.a) > 1e-12) else "kept"
        if isinstance(g, Ray):
            last = big[-1]
            if last < m - 1:
                b = pts[last + 1]
                rule = "tol"
            rec["cut_dev"] = float(dev[min(last + 1, m - 1)])
        rec.update(max_dev=float(np.max(dev)), rule=rule, end=[complex(b).real, complex(b).imag])
        records.append(rec)
        if abs(b - a) < 1e-10:
            continue
        pieces.append(JumpPiece(Segment(a, b, g.n), p.jump, p.label, dict(p.info, rule=rule)))
    pieces = _split_oscillatory(pieces, rhp.phase)
    pieces = _split_near(pieces, rhp.meta.get("singular_points", ()))
    out = RHProblem(pieces, rhp.phase, rhp.lam, rhp.pipeline, rhp.f1, records, dict(rhp.meta))
    out.meta["trunc_tol"] = trunc_tol
    out.meta["radius"] = radius
    return out


def _split_oscillatory(pieces: list, phase: PhaseParams) -> list:
    """Split segments so each carries at most a few oscillations of ``E``."""
    out = []
    for p in pieces:
        g = p.geometry
        if not isinstance(g, Segment):
            out.append(p)
            continue
        s = np.linspace(0, 1, 801)
        ph = phase.exponent(g.a + (g.b - g.a) * s).imag
        total = np.sum(np.abs(np.diff(ph))) / (2 * np.pi)
        m = min(_MAX_SPLIT, int(np.ceil(total * _NODES_PER_OSC / g.n)))
        if m <= 1:
            out.append(p)
            continue
        # equal phase increments per sub-piece
        cum = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(ph)))])
        cuts = np.interp(np.linspace(0, cum[-1], m + 1), cum, s)
        pts = g.a + (g.b - g.a) * cuts
        for j in range(m):
            out.append(JumpPiece(Segment(pts[j], pts[j + 1], g.n), p.jump, p.label, p.info))
    return out


def _split_near(pieces: list, points, ratio: float = 2.0) -> list:
    """Grade segments geometrically towards nearby singular points.

    A segment longer than ``ratio`` times its distance ``d`` to a singular
    point is cut at the foot of the perpendicular and at distances
    ``d 2^j`` from it, so every sub-piece stays within a fixed multiple of
    its own distance to the point.
    """
    if not len(points):
        return pieces
    out = []
    for p in pieces:
        g = p.geometry
        if not isinstance(g, Segment):
            out.append(p)
            continue
        length = g.length()
        dists = [_distance(g, z) for z in points]
        z = points[int(np.argmin(dists))]
        d = max(min(dists), 1e-3)
        if length <= ratio * d:
            out.append(p)
            continue
        foot = np.clip(((z - g.a) * np.conj(g.b - g.a)).real / length, 0.0, length)
        cuts = {0.0, length, foot}
        step = d
        while step < length:
            cuts.update(c for c in (foot - step, foot + step) if 0 < c < length)
            step *= 2
        cuts = np.array(sorted(cuts))
        cuts = cuts[np.concatenate([[True], np.diff(cuts) > 1e-9 * length])]
        pts = g.a + (g.b - g.a) * cuts / length
        for a, b in zip(pts[:-1], pts[1:]):
            out.append(JumpPiece(Segment(a, b, g.n), p.jump, p.label, p.info))
    return out


# ---------------------------------------------------------------------------
# Small (x, t)
# ---------------------------------------------------------------------------


class _EightLayout(_Layout):
    """Quadrants split by the diagonals, with rational gauges near the axes.

    ``r:`` factors are built from the rational pair ``gamma0, Gamma0``.
    Near ``R+`` the gauges are ``P_R^{-1}`` (above) and ``M_R`` (below),
    near ``R-`` the lower factor ``[[1, 0], [-rho_tilde_R E, 1]]`` (above)
    and the upper ``[[1, rho_R/E], [0, 1]]`` (below), and next to ``iR+``
    and ``iR-`` (right half) ``J1_R^{-1}`` and ``J3_R``.  Each axis jump
    then carries only the remainder of ``gamma, Gamma``, while the
    rational factors sit on the diagonals where they decay.
    """

    _GAUGES = {
        ("Q1", True): ("r:Pinv",),
        ("Q1", False): ("r:J1inv",),
        ("Q2", True): ("r:Lrho",),
        ("Q2", False): (),
        ("Q3", True): ("r:Urho",),
        ("Q3", False): (),
        ("Q4", True): ("r:M",),
        ("Q4", False): ("r:J3",),
    }

    def _classify(self, k):
        q = _quadrant(k)
        near_real = abs(k.imag) < abs(k.real)
        return Region(q, self._GAUGES[(q, near_real)], 1 if k.imag > 0 else -1)


def build_smallxt(
    pair: GammaPair,
    x: float,
    t: float,
    q0_at_0: complex,
    khat: complex = 1 - 2j,
    n: int = DEFAULT_N,
) -> RHProblem:
    """Eight-ray problem for small ``(x, t)`` or far-left ``k0``.

    With ``gamma0 = q0(0)/(2i(k - khat))`` and
    ``Gamma0 = lam conj(q0(0))/(2i(k - khat))`` the axis jumps carry
    ``gamma - gamma0`` and ``Gamma - Gamma0`` and approach ``I`` like
    ``1/k^2``; the rational parts move to the diagonals
    ``arg k = pi/4 + j pi/2``.  ``khat`` must lie in the open fourth
    quadrant below the diagonal so that no rational gauge is singular in
    its sector.
    """
    khat = complex(khat)
    if not (khat.real > 0 and khat.imag < -khat.real):
        raise ConfigError("khat must lie in the fourth quadrant below the diagonal")
    phase = PhaseParams(x, t)
    lam = pair.lam
    c0 = complex(q0_at_0)

    def g0(k):
        return c0 / (2j * (np.asarray(k, dtype=complex) - khat))

    def G0(k):
        return lam * np.conj(c0) / (2j * (np.asarray(k, dtype=complex) - khat))

    rational = JumpFactors(GammaPair(gamma=g0, Gamma=G0, lam=lam, kind="rational"), phase)
    factors = JumpFactors(pair, phase, rational=rational)
    layout = _EightLayout()
    edges = [(f"axis-{j}", Ray(0, j * np.pi / 2, n)) for j in range(4)]
    edges += [(f"diagonal-{j}", Ray(0, np.pi / 4 + j * np.pi / 2, n)) for j in range(4)]
    edges = _with_notches(pair, layout, edges, n)
    pieces = _assemble(edges, layout, factors, n)
    return RHProblem(pieces, phase, lam, "smallxt", meta={"layout": layout, "factors": factors, "khat": khat})


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def select_pipeline(x: float, t: float) -> str:
    """``smallxt`` for ``t < 0.05`` or ``k0 < -40``, ``lensed`` otherwise."""
    if t < T_MIN:
        return "smallxt"
    if -x / (4 * t) < K0_MIN:
        return "smallxt"
    return "lensed"


def build_rhp(
    pair: GammaPair,
    x: float,
    t: float,
    pipeline: str = "auto",
    q0_at_0: complex | None = None,
    trunc_tol: float | None = None,
    radius: float | None = None,
    n: int = DEFAULT_N,
    mode: str | None = None,
) -> RHProblem:
    """Build, convert residues and truncate the problem at ``(x, t)``."""
    if pipeline == "auto":
        pipeline = select_pipeline(x, t)
    if mode is None:
        mode = pair.meta.get("j1_mode", "ray")
    if pipeline == "undeformed":
        rhp = build_undeformed(pair, x, t, n)
    elif pipeline == "steepest":
        rhp = deform_steepest(pair, x, t, n=n, mode=mode)
    elif pipeline == "lensed":
        rhp = deform_conjugate_lens(pair, x, t, n=n, mode=mode)
    elif pipeline == "smallxt":
        if q0_at_0 is None:
            q0_at_0 = pair.meta.get("q0_at_0")
        if q0_at_0 is None:
            raise ConfigError("small-(x,t) pipeline needs q0(0)")
        rhp = build_smallxt(pair, x, t, q0_at_0, n=n)
    else:
        raise ConfigError(f"unknown pipeline {pipeline!r}")
    rhp = convert_residues(rhp, pair, n=n)
    sing = [z for p in pair.poles for z in (p.z, np.conj(p.z))]
    if "khat" in rhp.meta:
        sing += [rhp.meta["khat"], np.conj(rhp.meta["khat"])]
    rhp.meta["singular_points"] = sing
    return truncate(rhp, trunc_tol, radius)
