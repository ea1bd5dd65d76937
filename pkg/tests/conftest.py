from __future__ import annotations

import numpy as np
import pytest

from nutm.boundary import certify_strip, dirichlet_gamma, neumann_gamma, overdetermined_gamma
from nutm.dressing import DressingSpec, Rational
from nutm.oracles import ExactSolutionParams, exact_eval, exact_eval_qx
from nutm.spectral import BoundaryData, InitialData, compute_AB, compute_ab, rational_continuation

ACCEPTANCE_LINES: list[str] = []


def report(line: str) -> None:
    """Record one acceptance line for the terminal summary."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


SOLITON = ExactSolutionParams("soliton", 1.0, 1.0, 0.4)


def trace_pair(params: ExactSolutionParams, alpha: float = 1.2):
    q = lambda x, t: exact_eval(params, x, t)
    qx = lambda x, t: exact_eval_qx(params, x, t)
    init = InitialData(lambda x: q(x, 0.0), alpha=alpha, lam=params.lam, dq0=lambda x: qx(x, 0.0))
    spec = compute_ab(init)
    bdata = BoundaryData(lambda t: q(0.0, t), lambda t: qx(0.0, t), beta=8 * params.xi * params.eta)
    bspec = rational_continuation(compute_AB(bdata, params.lam))
    return overdetermined_gamma(spec, bspec), spec, bspec, init, bdata


@pytest.fixture(scope="session")
def soliton_setup():
    return trace_pair(SOLITON)


@pytest.fixture(scope="session")
def soliton_pair(soliton_setup):
    return soliton_setup[0]


def x_gaussian(x):
    return x * np.exp(-x**2)


@pytest.fixture(scope="session")
def dirichlet_setup():
    init = InitialData(x_gaussian, alpha=2.0, lam=-1, dq0=lambda x: (1 - 2 * x**2) * np.exp(-(x**2)))
    spec = compute_ab(init)
    return certify_strip(dirichlet_gamma(spec)), spec, init


def neumann_q0(x):
    return np.exp(-(x**2)) + 1j / np.cosh(x) ** 2


@pytest.fixture(scope="session")
def neumann_setup():
    init = InitialData(neumann_q0, alpha=1.0, lam=1)
    spec = compute_ab(init)
    return certify_strip(neumann_gamma(spec)), spec, init


def dressing_example() -> DressingSpec:
    den = tuple(np.polynomial.polynomial.polyfromroots([2 - 2j] * 5))
    Gamma = Rational((0.0, 1000.0), den)
    return DressingSpec.from_gamma(Rational.zero(), Gamma, ((-1 + 1j, 1e5), (-2 + 1j, 2.0)), lam=1)
