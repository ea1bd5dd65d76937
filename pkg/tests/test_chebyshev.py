from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nutm.chebyshev import (
    Circle,
    Ray,
    Segment,
    boundary_rows,
    cauchy_boundary,
    cauchy_off,
    chebpts,
    coefficients,
    differentiate,
    integrate,
    interpolate,
    node_parameters,
)
from nutm.exceptions import DomainError, NonIntegrableError


def _cauchy_bump(z):
    # Cauchy transform of 1 - s^2 on [-1, 1]
    z = np.asarray(z, dtype=complex)
    return ((1 - z**2) * np.log((z - 1) / (z + 1)) - 2 * z) / (2j * np.pi)


def test_chebpts_symmetric_and_ascending():
    x = chebpts(17)
    assert x[0] == -1 and x[-1] == 1
    assert np.all(np.diff(x) > 0)
    np.testing.assert_allclose(x, -x[::-1], atol=1e-15)


def test_coefficients_of_t3():
    x = chebpts(9)
    c = coefficients(4 * x**3 - 3 * x)
    expected = np.zeros(9)
    expected[3] = 1
    np.testing.assert_allclose(c, expected, atol=1e-14)


def test_interpolation_and_integration_on_segment():
    seg = Segment(1 + 1j, 3 + 2j, 12)
    s = seg.points()
    f = s**3 - 2 * s
    z = np.array([1.5 + 1.25j, 2.2 + 1.6j])
    np.testing.assert_allclose(interpolate(seg, f, z), z**3 - 2 * z, atol=1e-12)
    exact = ((3 + 2j) ** 4 - (1 + 1j) ** 4) / 4 - ((3 + 2j) ** 2 - (1 + 1j) ** 2)
    assert abs(integrate(seg, f) - exact) < 1e-12


def test_interpolation_off_piece_rejected():
    with pytest.raises(DomainError):
        interpolate(Segment(0, 1, 8), np.ones(8), 0.5 + 0.5j)


def test_differentiate_segment():
    seg = Segment(0, 2, 16)
    s = seg.points()
    np.testing.assert_allclose(differentiate(seg, np.sin(s)), np.cos(s), atol=1e-10)


def test_ray_integral():
    ray = Ray(0.0, 0.0, 64)
    s = ray.points()
    assert abs(integrate(ray, 1 / (1 + s) ** 3) - 0.5) < 1e-10


def test_ray_rejects_slow_decay():
    ray = Ray(0.0, 0.0, 32)
    with pytest.raises(NonIntegrableError):
        integrate(ray, 1 / (1 + ray.points()))


def test_cauchy_off_segment_closed_form():
    seg = Segment(-1, 1, 20)
    s = seg.points()
    z = np.array([0.3 + 0.5j, -2 + 1j, 0.1 - 0.01j, 4.0 + 0j])
    got = cauchy_off([seg], [1 - s**2], z)
    np.testing.assert_allclose(got, _cauchy_bump(z), atol=1e-13)


def test_cauchy_boundary_values_closed_form():
    seg = Segment(-1, 1, 20)
    s = seg.points()
    dens = 1 - s**2
    for j in range(1, 19):
        x = s[j].real
        plus = cauchy_boundary([seg], [dens], 0, j, "+")
        minus = cauchy_boundary([seg], [dens], 0, j, "-")
        principal = ((1 - x**2) * np.log((1 - x) / (1 + x)) - 2 * x) / (2j * np.pi)
        assert abs(plus - (principal + (1 - x**2) / 2)) < 1e-12
        assert abs(minus - (principal - (1 - x**2) / 2)) < 1e-12


def test_cauchy_circle_constant():
    c = Circle(0.5j, 0.7, 15)
    u = np.ones(c.n)
    assert abs(cauchy_off([c], [u], 0.5j + 0.2) - 1) < 1e-13
    assert abs(cauchy_off([c], [u], 3.0)) < 1e-13


def test_cauchy_off_on_contour_rejected():
    seg = Segment(0, 1, 8)
    with pytest.raises(DomainError):
        cauchy_off([seg], [np.ones(8)], 0.5)


@settings(max_examples=25, deadline=None)
@given(
    a=st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
    d=st.complex_numbers(min_magnitude=0.2, max_magnitude=3, allow_nan=False, allow_infinity=False),
    c=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    n=st.integers(8, 40),
)
def test_plemelj_segments(a, d, c, n):
    seg = Segment(a, a + d, n)
    s = seg.points()
    dens = c[0] + c[1] * s + c[2] * np.cos(s)
    tau = node_parameters(seg)
    plus = boundary_rows([seg], 0, tau, 1)[0] @ dens
    minus = boundary_rows([seg], 0, tau, -1)[0] @ dens
    assert np.max(np.abs(plus - minus - dens)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(
    angle=st.floats(-np.pi, np.pi),
    base=st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
    n=st.integers(16, 64),
)
def test_plemelj_rays_and_circles(angle, base, n):
    ray = Ray(base, angle, n)
    s = ray.points()
    dens = np.exp(-((s - base) * np.exp(-1j * angle)) ** 2)
    tau = node_parameters(ray)
    jump = (boundary_rows([ray], 0, tau, 1)[0] - boundary_rows([ray], 0, tau, -1)[0]) @ dens
    assert np.max(np.abs(jump - dens)) < 1e-10
    circ = Circle(base, 0.5, n)
    w = circ.points()
    dens = np.cos(w) + 1j * w
    ang = node_parameters(circ)
    jump = (boundary_rows([circ], 0, ang, 1)[0] - boundary_rows([circ], 0, ang, -1)[0]) @ dens
    assert np.max(np.abs(jump - dens)) < 1e-10
