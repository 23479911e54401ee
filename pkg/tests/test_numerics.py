import numpy as np
import pytest

from kinklab.errors import NonConvergence, ValidationError
from kinklab.numerics import (
    ContourPath,
    Grid1D,
    LineSegment,
    adaptive_contour,
    contour_integrate,
    gamma_tail,
    mills_product,
)

# mpmath quadrature of the defining integrals (50 and 200 digits), frozen
GAMMA_TAIL_1 = 0.078649603525142565329389682458695
MILLS_5_5 = 5.414096560959561196492461e-24


def test_gamma_tail_values():
    assert gamma_tail(0.0) == pytest.approx(0.5, rel=1e-15)
    assert gamma_tail(1.0) == pytest.approx(GAMMA_TAIL_1, rel=1e-12)
    assert gamma_tail(-0.7) == pytest.approx(1 - gamma_tail(0.7), rel=1e-12)
    assert gamma_tail(40.0) >= 0.0 and gamma_tail(40.0) < 1e-300


def test_gamma_tail_reflection_complex():
    re, im = np.meshgrid(np.linspace(-7, 7, 15), np.linspace(-7, 7, 15))
    z = (re + 1j * im).ravel()
    z = z[np.abs(z) <= 10]
    lhs = gamma_tail(z) + gamma_tail(-z)
    scale = np.maximum(1.0, np.abs(gamma_tail(z)))
    assert np.max(np.abs(lhs - 1) / scale) < 1e-12


def test_mills_product():
    assert mills_product(0.0, 0.0) == pytest.approx(0.5, rel=1e-15)
    assert mills_product(3.0, -3.0) == pytest.approx(0.5 * np.exp(-18.0), rel=1e-12)
    assert mills_product(5.0, 5.0) == pytest.approx(MILLS_5_5, rel=1e-10)


def test_mills_product_stable_form():
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-5, 5, (2, 200))
    naive = np.exp(2 * x * y) * gamma_tail(x + y)
    assert np.allclose(mills_product(x, y), naive, rtol=1e-10, atol=0)
    # large arguments stay finite
    big = mills_product(np.array([50.0, -50.0, 50.0]), np.array([50.0, 50.0, -49.0]))
    assert np.all(np.isfinite(big))


def test_grid():
    g = Grid1D(10.0, 101)
    assert g.dx == pytest.approx(0.2)
    assert np.all(np.diff(g.nodes) > 0)
    assert np.array_equal(g.nodes, -g.nodes[::-1])
    with pytest.raises(ValidationError):
        Grid1D(1.0, 3)


def test_contour_examples():
    circ = ContourPath.circle(0.0, 1.0)
    assert abs(contour_integrate(circ, lambda z: 1 / (2j * np.pi * z)) - 1) < 1e-12
    line = ContourPath.polyline([-10, 10])
    v = contour_integrate(line, lambda z: np.exp(-z * z) / np.sqrt(np.pi))
    assert abs(v - 1) < 1e-12
    a, t = 0.3j, 2.0
    small = ContourPath.circle(a, 0.1)
    v = contour_integrate(small, lambda z: np.exp(-z * t) / (2j * np.pi * (z - a)))
    assert abs(v - np.exp(-0.6j)) < 1e-12


def test_contour_additivity_and_reversal():
    f = lambda z: np.exp(-z) * np.cos(3 * z)
    p1 = ContourPath.polyline([0, 1 + 1j])
    p2 = ContourPath.polyline([1 + 1j, 3])
    whole = contour_integrate(p1 + p2, f, tol=1e-13)
    parts = contour_integrate(p1, f, tol=1e-13) + contour_integrate(p2, f, tol=1e-13)
    assert abs(whole - parts) < 1e-12
    assert abs(contour_integrate((p1 + p2).reversed(), f, tol=1e-13) + whole) < 1e-12


def test_contour_vector_valued_and_rule():
    line = ContourPath.polyline([0, 1])
    res = adaptive_contour(line, lambda z: np.stack([z, z ** 2], axis=1))
    assert np.allclose(res.value, [0.5, 1 / 3], atol=1e-14)
    assert abs(np.sum(res.weights * np.exp(res.nodes)) - (np.e - 1)) < 1e-13


def test_contour_errors():
    with pytest.raises(NonConvergence):
        contour_integrate(ContourPath.polyline([-1, 1]), lambda z: 1 / np.sqrt(np.abs(z) + 1e-300), max_panels=64)
    with pytest.raises(ValidationError):
        contour_integrate(ContourPath.polyline([0, 1]), lambda z: z, tol=0.5)
    with pytest.raises(ValidationError):
        ContourPath((LineSegment(0, 1), LineSegment(2, 3)))
