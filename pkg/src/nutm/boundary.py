"""Reflection functions for the half-line jump matrices.

``gamma(k) = b(k) / conj(a(conj k))`` lives on a strip around the real axis
and ``Gamma(k)`` on the upper half-plane.  For linearizable boundary
conditions ``Gamma`` follows from ``a`` and ``b`` alone: the global relation
in the first quadrant fixes ``B/A`` there, and the ``k -> -k`` symmetry of
the boundary problem carries it to the second quadrant.  For a Robin
condition ``q_x(0, t) = rho q(0, t)`` the result is

    Gamma(k) = lam f(k) b*(-k) / (a(k) [a(k) a*(-k) - lam f(k) b(k) b*(-k)])

with ``f(k) = (2k - i rho)/(2k + i rho)`` and ``g*(k) = conj(g(conj k))``.
Dirichlet and Neumann conditions are the limits ``rho -> inf`` and
``rho -> 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .exceptions import ConfigError, UnsupportedConfiguration
from .spectral import BoundarySpectralData, SpectralData

__all__ = [
    "Pole",
    "GammaPair",
    "dirichlet_gamma",
    "neumann_gamma",
    "robin_gamma",
    "overdetermined_gamma",
    "tau",
    "certify_strip",
    "find_denominator_zeros",
]

_MIN_STRIP = 1e-3
_TAU_FLOOR = 1e-3
_SCAN_HALF_WIDTH = 50.0


@dataclass(frozen=True)
class Pole:
    """Residue condition at ``z`` (upper half-plane) with constant ``c``.

    ``source`` is ``"a"`` for zeros of ``a`` and ``"d"`` for zeros of the
    boundary denominator or prescribed poles.  ``in_gamma`` records whether
    ``Gamma`` itself is singular at ``z``.
    """

    z: complex
    c: complex
    source: str = "a"
    in_gamma: bool = True


@dataclass(frozen=True)
class GammaPair:
    """Functions entering the jump matrices of the half-line problem.

    Attributes
    ----------
    gamma : callable
        ``gamma(k)`` on ``|Im k| <= alpha_strip``.
    Gamma : callable
        ``Gamma(k)`` on the upper half-plane (and down to ``-alpha_strip``
        where the data allow).
    lam : int
    poles : tuple of Pole
    alpha_strip : float
        Half-width of the strip on which ``tau`` is certified nonzero.
    kind : str
    gamma_strip : float, optional
        Half-width of the strip on which ``gamma`` is analytic apart from
        the zeros of ``a``; defaults to ``alpha_strip``.
    """

    gamma: Callable
    Gamma: Callable
    lam: int
    poles: tuple = ()
    alpha_strip: float = 0.0
    kind: str = "custom"
    certified: bool = False
    meta: dict = field(default_factory=dict, compare=False)
    gamma_strip: float | None = None

    @property
    def gamma_height(self) -> float:
        return self.alpha_strip if self.gamma_strip is None else self.gamma_strip

    def gamma_star(self, k):
        k = np.asarray(k, dtype=complex)
        return np.conj(self.gamma(np.conj(k)))

    def Gamma_star(self, k):
        k = np.asarray(k, dtype=complex)
        return np.conj(self.Gamma(np.conj(k)))

    def rho(self, k):
        """``lam Gamma*(k) + gamma(k)``."""
        return self.lam * self.Gamma_star(k) + self.gamma(k)

    def rho_tilde(self, k):
        """``lam gamma*(k) + Gamma(k)``."""
        return self.lam * self.gamma_star(k) + self.Gamma(k)

    def tau(self, k):
        return tau(self, k)


def _gamma_from_spec(spec: SpectralData) -> Callable:
    def gamma(k):
        k = np.asarray(k, dtype=complex)
        return spec.b(k) / spec.a_star(k)

    return gamma


def _pole_list(spec: SpectralData, extra) -> tuple:
    poles = [Pole(z.p, z.c, "a", True) for z in spec.zeros]
    for item in extra or ():
        if isinstance(item, Pole):
            poles.append(item)
        else:
            z, c = item
            poles.append(Pole(complex(z), complex(c), "d", True))
    return tuple(poles)


def _check_real_axis(denominator: Callable, label: str) -> None:
    ks = np.linspace(-_SCAN_HALF_WIDTH, _SCAN_HALF_WIDTH, 2001)
    if np.min(np.abs(denominator(ks))) < 1e-8:
        raise UnsupportedConfiguration(f"{label} vanishes on the real axis")


def _winding(f: Callable, corners: list, m: int = 2000) -> int:
    """Winding number of ``f`` around 0 along a closed polygon."""
    total = 0.0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        n = m
        while True:
            z = a + (b - a) * np.linspace(0, 1, n)
            ang = np.angle(f(z))
            d = np.diff(ang)
            d = (d + np.pi) % (2 * np.pi) - np.pi
            if np.max(np.abs(d)) < 0.5 or n > 64 * m:
                break
            n *= 2
        total += np.sum(d)
    return int(round(total / (2 * np.pi)))


def _newton(f: Callable, k: complex, tol: float = 1e-13) -> complex | None:
    for _ in range(40):
        h = 1e-6 * (1 + abs(k))
        der = complex((f(np.array([k + h])) - f(np.array([k - h])))[0] / (2 * h))
        val = complex(f(np.array([k]))[0])
        if der == 0 or not np.isfinite(der):
            return None
        step = val / der
        k -= step
        if abs(step) < 1e-12 * (1 + abs(k)):
            break
    return k if abs(complex(f(np.array([k]))[0])) < 1e-9 else None


def find_denominator_zeros(
    denominator: Callable, floor: float = 1e-3, spacing: float = 0.05
) -> list[complex]:
    """Zeros of the boundary denominator in the upper half-plane.

    The denominator tends to one at infinity, so a box with
    ``|denominator - 1| < 1/2`` on its sides encloses every zero.  Their
    number is the winding number along the box; they are located by
    Newton's method from local minima of ``|denominator|`` on a grid.

    Raises
    ------
    UnsupportedConfiguration
        If fewer zeros are found than the winding number predicts.
    """
    B = 8.0
    while B < 64:
        s = np.linspace(-B, B, 4001)
        if max(np.max(np.abs(denominator(s + 1j * B) - 1)), np.max(np.abs(denominator(B + 1j * s[2000:]) - 1))) < 0.5:
            break
        B *= 2
    count = _winding(denominator, [complex(-B, floor), complex(B, floor), complex(B, B), complex(-B, B)])
    if count == 0:
        return []
    xs = np.arange(-B, B + spacing / 2, spacing)
    ys = np.arange(floor, B + spacing / 2, spacing)
    Z = xs[None, :] + 1j * ys[:, None]
    V = np.abs(denominator(Z.ravel())).reshape(Z.shape)
    pad = np.pad(V, 1, constant_values=np.inf)
    is_min = np.ones(V.shape, bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_min &= V <= pad[1 + di : 1 + di + V.shape[0], 1 + dj : 1 + dj + V.shape[1]]
    seeds = Z[is_min][np.argsort(V[is_min])]
    found: list[complex] = []
    for seed in seeds:
        k = _newton(denominator, complex(seed))
        if k is None or k.imag <= 0:
            continue
        if abs(k.real) < 1e-9:
            k = complex(0.0, k.imag)
        if all(abs(k - z) > 1e-6 for z in found):
            found.append(k)
        if len(found) == count:
            return sorted(found, key=lambda z: (z.imag, z.real))
    raise UnsupportedConfiguration(f"found {len(found)} of {count} zeros of the boundary denominator")


def _residue(f: Callable, z: complex, r: float, m: int = 64) -> complex:
    w = r * np.exp(2j * np.pi * np.arange(m) / m)
    return complex(np.mean(f(z + w) * w))


def robin_gamma(
    spec: SpectralData,
    lam: int | None = None,
    rho: float = 1.0,
    d_poles=(),
    find_zeros: bool = True,
) -> GammaPair:
    """``GammaPair`` for the Robin condition ``q_x(0,t) = rho q(0,t)``.

    Parameters
    ----------
    spec : SpectralData
    lam : int, optional
        Defaults to ``spec.lam``.
    rho : float
        Positive Robin parameter; ``numpy.inf`` gives the Dirichlet case.
    d_poles : sequence
        Extra residue conditions ``(z, c)``.
    find_zeros : bool
        Locate the zeros of the denominator in the upper half-plane and add
        them as poles with ``c`` the residue of ``Gamma``.

    Raises
    ------
    ConfigError
        If ``rho < 0``.
    UnsupportedConfiguration
        If the denominator vanishes on the real axis.
    """
    lam = spec.lam if lam is None else lam
    if rho < 0:
        raise ConfigError("Robin parameter must be nonnegative")

    def ratio(k):
        # (2k - i rho)/(2k + i rho) with its limits
        if np.isinf(rho):
            return -np.ones_like(k)
        if rho == 0:
            return np.ones_like(k)
        return (2 * k - 1j * rho) / (2 * k + 1j * rho)

    def minus_star(f, k):
        return np.conj(f(-np.conj(k)))

    def denominator(k):
        k = np.asarray(k, dtype=complex)
        a, b = spec.ab(k)
        am = minus_star(spec.a, k)
        bm = minus_star(spec.b, k)
        return a * am - lam * ratio(k) * b * bm

    def Gamma(k):
        k = np.asarray(k, dtype=complex)
        return lam * ratio(k) * minus_star(spec.b, k) / (spec.a(k) * denominator(k))

    _check_real_axis(denominator, "boundary denominator")
    extra = list(d_poles)
    if find_zeros:
        zs = find_denominator_zeros(denominator)
        singular = zs + [p.p for p in spec.zeros]
        for z in zs:
            r = min([0.1, z.imag / 2] + [abs(z - w) / 2 for w in singular if w != z])
            extra.append(Pole(z, _residue(Gamma, z, r), "d", True))
    kind = "dirichlet" if np.isinf(rho) else ("neumann" if rho == 0 else "robin")
    return GammaPair(
        gamma=_gamma_from_spec(spec),
        Gamma=Gamma,
        lam=lam,
        poles=_pole_list(spec, extra),
        alpha_strip=spec.alpha_effective,
        kind=kind,
        meta={"rho": rho, "denominator": denominator, "spec": spec},
        gamma_strip=spec.alpha_effective,
    )


def dirichlet_gamma(spec: SpectralData, lam: int | None = None, d_poles=(), find_zeros: bool = True) -> GammaPair:
    """``GammaPair`` for ``q(0, t) = 0``: ``Gamma = -lam b*(-k)/(a Delta0)``."""
    return robin_gamma(spec, lam, np.inf, d_poles, find_zeros)


def neumann_gamma(spec: SpectralData, lam: int | None = None, d_poles=(), find_zeros: bool = True) -> GammaPair:
    """``GammaPair`` for ``q_x(0, t) = 0``: ``Gamma = lam b*(-k)/(a Delta1)``."""
    return robin_gamma(spec, lam, 0.0, d_poles, find_zeros)


def overdetermined_gamma(
    spec: SpectralData, bspec: BoundarySpectralData, d_poles=()
) -> GammaPair:
    """``GammaPair`` from compatible initial and boundary data.

    ``Gamma(k) = -lam B*(k) / (a(k) d(k))`` with
    ``d = a A* + lam b B*``; ``B*`` is analytic in the second quadrant for
    ``T = inf``, so ``Gamma`` is trusted there and on its boundary.
    """
    lam = spec.lam

    def Gamma(k):
        k = np.asarray(k, dtype=complex)
        a, b = spec.ab(k)
        As = bspec.A_star(k)
        Bs = bspec.B_star(k)
        return -lam * Bs / (a * (a * As + lam * b * Bs))

    return GammaPair(
        gamma=_gamma_from_spec(spec),
        Gamma=Gamma,
        lam=lam,
        poles=_pole_list(spec, d_poles),
        alpha_strip=spec.alpha_effective,
        kind="overdetermined",
        meta={"spec": spec, "bspec": bspec},
        gamma_strip=spec.alpha_effective,
    )


def tau(pair: GammaPair, k):
    """``1 + rho(k) rho_tilde(k)``; equals ``1 + lam |rho_tilde|^2`` on the real axis."""
    k = np.asarray(k, dtype=complex)
    return 1.0 + pair.rho(k) * pair.rho_tilde(k)


def _scan_half_width(pair: GammaPair) -> float:
    """Extent of the real axis outside which ``rho_tilde`` is negligible."""
    s = np.linspace(-_SCAN_HALF_WIDTH, _SCAN_HALF_WIDTH, 4001)
    big = np.nonzero(~(np.abs(pair.rho_tilde(s + 0j)) < 1e-4))[0]
    if big.size == 0:
        return 2.0
    return float(min(_SCAN_HALF_WIDTH, np.max(np.abs(s[big])) + 2.0))


def certify_strip(
    pair: GammaPair, alpha: float | None = None, half_width: float | None = None
) -> GammaPair:
    """Certify the strip half-width on which ``tau`` stays away from zero.

    The width starts at ``alpha/2``.  If a pole sits at height at most
    ``alpha/2`` the decay rate is reset to a quarter of the lowest pole
    height, giving width ``min Im z / 8``.  The width is then halved until
    ``|tau| > 1e-3`` on both strip edges sampled at 100 points per unit.
    The edges extend over ``|Re k| <= half_width``; by default this is where
    ``|rho_tilde| >= 1e-4`` on the real axis, since ``tau`` is close to one
    elsewhere.

    Raises
    ------
    UnsupportedConfiguration
        If the width falls below ``1e-3``.
    """
    if alpha is None:
        alpha = 2 * pair.alpha_strip
    width = alpha / 2
    heights = [p.z.imag for p in pair.poles if p.z.imag > 0]
    if heights and min(heights) <= width:
        width = min(heights) / 8
    if half_width is None:
        half_width = _scan_half_width(pair)
    m = int(2 * half_width * 100) + 1
    s = np.linspace(-half_width, half_width, m)
    while width >= _MIN_STRIP:
        ok = True
        for sign in (1, -1):
            vals = pair.tau(s + 1j * sign * width)
            if not np.all(np.isfinite(vals)) or np.min(np.abs(vals)) <= _TAU_FLOOR:
                ok = False
                break
        if ok:
            return replace(pair, alpha_strip=float(width), certified=True)
        width /= 2
    raise UnsupportedConfiguration("strip width underflow while certifying tau")
