"""Solutions generated directly from prescribed spectral data.

Instead of computing ``gamma`` and ``Gamma`` from initial and boundary
data, the user prescribes ``gamma``, the ratio ``h = B/A`` on the third
quadrant and a list of residue conditions.  The upper-plane function is
``Gamma(k) = -lam conj(h(conj k))`` (with ``b = 0``), and the resulting
problem is deformed and solved exactly like the data-driven one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .boundary import GammaPair, Pole, certify_strip
from .exceptions import ConfigError, UnsupportedConfiguration
from .rhp import RHProblem, build_rhp

__all__ = [
    "Rational",
    "DressingSpec",
    "build_dressed_pair",
    "build_dressed_rhp",
    "check_global_relation_dressing",
    "GlobalRelationDressingReport",
]


def _coef(c) -> complex:
    if isinstance(c, (list, tuple)):
        if len(c) != 2:
            raise ConfigError("complex coefficients are [re, im] pairs")
        return complex(float(c[0]), float(c[1]))
    return complex(c)


@dataclass(frozen=True)
class Rational:
    """``p(k)/q(k)`` with coefficient lists in increasing powers of ``k``."""

    numerator: tuple
    denominator: tuple = (1.0,)

    def __post_init__(self):
        num = tuple(_coef(c) for c in self.numerator)
        den = tuple(_coef(c) for c in self.denominator)
        if not den or all(c == 0 for c in den):
            raise ConfigError("rational denominator is identically zero")
        object.__setattr__(self, "numerator", num or (0j,))
        object.__setattr__(self, "denominator", den)

    @classmethod
    def zero(cls) -> "Rational":
        return cls((0.0,), (1.0,))

    @classmethod
    def from_roots(cls, numerator, scale: complex = 1.0, poles: Sequence[complex] = ()) -> "Rational":
        """``scale * numerator(k) / prod (k - p)`` with ``numerator`` in increasing powers."""
        den = np.polynomial.polynomial.polyfromroots(list(poles)) if len(poles) else np.array([1.0])
        return cls(tuple(complex(scale) * np.asarray(numerator, dtype=complex)), tuple(den))

    def __call__(self, k):
        k = np.asarray(k, dtype=complex)
        P = np.polynomial.polynomial.polyval(k, np.array(self.numerator))
        Q = np.polynomial.polynomial.polyval(k, np.array(self.denominator))
        return P / Q

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.numerator)

    def poles(self) -> np.ndarray:
        den = np.trim_zeros(np.array(self.denominator), "b")
        return np.polynomial.polynomial.polyroots(den) if den.size > 1 else np.array([], dtype=complex)

    def leading_1_over_k(self) -> complex:
        """Coefficient ``c`` in ``p/q = c/k + O(1/k^2)`` (requires decay)."""
        num = np.trim_zeros(np.array(self.numerator), "b")
        den = np.trim_zeros(np.array(self.denominator), "b")
        if num.size == 0:
            return 0j
        if num.size >= den.size:
            raise ConfigError("rational function does not decay at infinity")
        return complex(num[-1] / den[-1]) if num.size == den.size - 1 else 0j

    def to_json(self) -> dict:
        return {
            "numerator": [[c.real, c.imag] for c in self.numerator],
            "denominator": [[c.real, c.imag] for c in self.denominator],
        }

    @classmethod
    def from_json(cls, obj) -> "Rational":
        if obj in (None, "zero", 0):
            return cls.zero()
        try:
            return cls(tuple(obj["numerator"]), tuple(obj.get("denominator", [1.0])))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed rational function: {obj!r}") from exc


@dataclass(frozen=True)
class DressingSpec:
    """Prescribed spectral data.

    Attributes
    ----------
    gamma_ratio : callable
        ``gamma(k)`` on the real strip, used as is in the jump on the real
        axis.
    Gamma_ratio : callable
        ``h(k) = B(k)/A(k)`` for ``arg k`` in ``[pi, 3 pi/2]``.
    poles : sequence of (z, c)
        Residue conditions, ``Im z > 0`` and ``c != 0``.
    lam : int
    h_first_quadrant : callable, optional
        ``h`` on the first quadrant, where the global relation ties it to
        ``b/a``; ``None`` means zero.
    """

    gamma_ratio: Callable
    Gamma_ratio: Callable
    poles: tuple = ()
    lam: int = 1
    h_first_quadrant: Callable | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.lam not in (-1, 1):
            raise ConfigError("lambda must be +1 or -1")
        poles = tuple((complex(z), complex(c)) for z, c in self.poles)
        object.__setattr__(self, "poles", poles)
        zs = [z for z, _ in poles]
        for z, c in poles:
            if z.imag <= 0:
                raise ConfigError(f"residue condition at {z} is not in the upper half-plane")
            if c == 0:
                raise ConfigError("residue constants must be nonzero")
        if len(set(zs)) != len(zs):
            raise ConfigError("residue locations must be distinct")
        if poles and self.lam == -1:
            raise ConfigError("residue conditions require the focusing case lam = +1")

    @classmethod
    def from_gamma(cls, gamma, Gamma, poles=(), lam: int = 1, **kw) -> "DressingSpec":
        """Spec whose upper-plane jump function is ``Gamma``.

        Uses ``h(k) = -lam conj(Gamma(conj k))``, the inverse of the map
        applied by :meth:`Gamma`.
        """
        if isinstance(Gamma, Rational):
            h = Rational(
                tuple(-lam * np.conj(c) for c in Gamma.numerator),
                tuple(np.conj(c) for c in Gamma.denominator),
            )
        else:
            h = lambda k: -lam * np.conj(Gamma(np.conj(np.asarray(k, dtype=complex))))
        return cls(gamma, h, poles, lam, **kw)

    def Gamma(self, k):
        """``Gamma(k) = -lam conj(h(conj k))`` on the upper half-plane."""
        k = np.asarray(k, dtype=complex)
        return -self.lam * np.conj(self.Gamma_ratio(np.conj(k)))

    def normalization(self, k):
        """``1 + lam h(k) conj(h(conj k))``, equal to ``1/(A A*)``."""
        k = np.asarray(k, dtype=complex)
        return 1 + self.lam * self.Gamma_ratio(k) * np.conj(self.Gamma_ratio(np.conj(k)))

    def check(self, samples: int = 2001, radius: float = 50.0, tol: float = 1e-8) -> None:
        """Sample the normalization on the boundary of the third quadrant.

        Raises
        ------
        UnsupportedConfiguration
            If ``1 + lam h h*`` vanishes or ``h`` is not finite there.
        """
        s = np.linspace(0, radius, samples)
        ks = np.concatenate([-s + 0j, -1j * s])
        val = self.normalization(ks)
        if not np.all(np.isfinite(val)) or np.min(np.abs(val)) < tol:
            raise UnsupportedConfiguration("the normalization 1 + lam h h* vanishes on the contour")
        for z, _ in self.poles:
            if abs(z.real) < 1e-12:
                raise UnsupportedConfiguration(f"residue condition {z} lies on the imaginary axis")

    def q0_at_0(self) -> complex:
        """``q(0, 0) = lim 2ik gamma(k)``."""
        if isinstance(self.gamma_ratio, Rational):
            return 2j * self.gamma_ratio.leading_1_over_k()
        k = 1e6
        return complex(2j * k * self.gamma_ratio(np.array([k + 0j]))[0])

    def to_json(self) -> dict:
        def ser(f):
            if isinstance(f, Rational):
                return "zero" if f.is_zero else f.to_json()
            raise ConfigError("only rational spectral functions can be serialized")

        return {
            "lambda": self.lam,
            "gamma": ser(self.gamma_ratio),
            "h": ser(self.Gamma_ratio),
            "poles": [{"re": z.real, "im": z.imag, "c_re": c.real, "c_im": c.imag} for z, c in self.poles],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, obj) -> "DressingSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            lam = int(obj["lambda"])
            gamma = Rational.from_json(obj.get("gamma", "zero"))
            h = Rational.from_json(obj["h"])
            poles = [(complex(p["re"], p["im"]), complex(p["c_re"], p.get("c_im", 0.0))) for p in obj.get("poles", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed dressing spec: {exc}") from exc
        return cls(gamma, h, tuple(poles), lam)


def _strip_for(spec: DressingSpec) -> float:
    """Largest strip half-width kept away from the singularities of the data."""
    sing = []
    for f in (spec.gamma_ratio, spec.Gamma_ratio):
        if isinstance(f, Rational):
            sing += list(f.poles())
    heights = [abs(z.imag) for z in sing if abs(z.imag) > 1e-12] + [z.imag for z, _ in spec.poles]
    return min([1.0] + [0.5 * y for y in heights])


def build_dressed_pair(spec: DressingSpec) -> GammaPair:
    """``GammaPair`` carrying the prescribed data, with a certified strip."""
    spec.check()
    width = _strip_for(spec)
    pair = GammaPair(
        gamma=lambda k: np.asarray(spec.gamma_ratio(np.asarray(k, dtype=complex)), dtype=complex) * np.ones(np.shape(k)),
        Gamma=lambda k: np.asarray(spec.Gamma(k), dtype=complex) * np.ones(np.shape(k)),
        lam=spec.lam,
        poles=tuple(Pole(z, c, "d", False) for z, c in spec.poles),
        alpha_strip=width,
        kind="dressing",
        meta={"q0_at_0": spec.q0_at_0(), "dressing": spec},
        gamma_strip=width,
    )
    return certify_strip(pair, alpha=2 * width)


def build_dressed_rhp(spec: DressingSpec, x: float, t: float, pair: GammaPair | None = None, **kw) -> RHProblem:
    """Problem at ``(x, t)`` for the prescribed data (see :func:`build_rhp`)."""
    if pair is None:
        pair = build_dressed_pair(spec)
    return build_rhp(pair, x, t, **kw)


@dataclass(frozen=True)
class GlobalRelationDressingReport:
    residual: float
    passed: bool
    note: str


def check_global_relation_dressing(spec: DressingSpec, ab=None, tol: float = 1e-6) -> GlobalRelationDressingReport:
    """Compare ``h`` on the first quadrant with ``b/a``.

    Without spectral data there is nothing to compare: the initial and
    boundary values of the dressed solution are defined implicitly.
    """
    if ab is None:
        return GlobalRelationDressingReport(0.0, True, "initial and boundary values are implicitly defined by the spectral data")
    r = np.linspace(0.5, 10, 12)
    ang = np.linspace(0.1, np.pi / 2 - 0.1, 5)
    ks = (r[:, None] * np.exp(1j * ang[None, :])).ravel()
    a, b = ab.ab(ks)
    h = spec.h_first_quadrant(ks) if spec.h_first_quadrant is not None else np.zeros_like(ks)
    res = float(np.max(np.abs(h - b / a)))
    return GlobalRelationDressingReport(res, res < tol, "h compared with b/a on the first quadrant")
