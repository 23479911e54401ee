import numpy as np
import pytest

from kinklab.errors import UnsupportedDimension, ValidationError
from kinklab.profiles import (
    AsymptoticAnsatz,
    asymptotic_state,
    du0,
    kink_family,
    phi,
    phi_half_width,
    phi_star,
    potential,
    u0,
)

# mpmath quadrature (30 digits) of the radial reductions, frozen
PHI1_AT_0 = 0.409951084964000490100614912729
PHI1_AT_3 = -0.0224205124616397342194710164649
PHI2_AT_0 = 0.149429452451275452638274570133
PHI2_AT_2_5 = 0.00806374170625658947289833896851


def test_kink_values():
    kv = kink_family(0.0)
    assert (kv.u0, kv.du0, kv.V) == (0.0, 0.5, -1.5)
    a, b = kink_family(2.3), kink_family(-2.3)
    assert a.u0 == -b.u0 and a.du0 == b.du0 and a.V == b.V
    far = kink_family(40.0)
    assert 0 <= 1 - far.u0 < 1e-16
    assert far.du0 == pytest.approx(2 * np.exp(-40), rel=1e-12)
    assert far.V == pytest.approx(-6 * np.exp(-40), rel=1e-12)


def test_kink_identities():
    x = np.linspace(-30, 30, 601)
    assert np.allclose(du0(x), 1 / (2 * np.cosh(x / 2) ** 2), rtol=1e-14, atol=0)
    assert np.array_equal(potential(x), -3 * du0(x))
    assert np.all(du0(x) <= 2 * np.exp(-np.abs(x)))
    assert np.allclose(np.gradient(u0(x), x, edge_order=2)[1:-1], du0(x)[1:-1], atol=2e-3)


def test_phi_star_values():
    assert phi_star(0.0, 1) == pytest.approx(PHI1_AT_0, abs=1e-12)
    assert phi_star(3.0, 1) == pytest.approx(PHI1_AT_3, abs=1e-12)
    assert phi_star(0.0, 2) == pytest.approx(PHI2_AT_0, abs=1e-12)
    assert phi_star(2.5, 2) == pytest.approx(PHI2_AT_2_5, abs=1e-12)
    with pytest.raises(UnsupportedDimension):
        phi_star(1.0, 3)


def test_phi_star_roundtrip_dim1():
    # forward cosine transform on [0, R] with the -2/(pi r^4) tail neglected
    R = 200.0
    xg, wg = np.polynomial.legendre.leggauss(30)
    edges = np.linspace(0, R, 801)
    r = (0.5 * (edges[1:] + edges[:-1])[:, None] + 0.5 * np.diff(edges)[:, None] * xg).ravel()
    w = (0.5 * np.diff(edges)[:, None] * wg).ravel()
    prof = phi_star(r, 1)
    for k in (0.0, 0.5, 1.0, 2.0):
        fwd = 2 * np.sum(w * prof * np.cos(k * r))
        assert abs(fwd - np.exp(-k ** 3 / 3)) < 1e-6


def test_phi_star_mass_dim2():
    edges = np.linspace(0, 400, 1601)
    xg, wg = np.polynomial.legendre.leggauss(30)
    r = (0.5 * (edges[1:] + edges[:-1])[:, None] + 0.5 * np.diff(edges)[:, None] * xg).ravel()
    w = (0.5 * np.diff(edges)[:, None] * wg).ravel()
    mass = np.sum(w * 2 * np.pi * r * phi_star(r, 2))
    assert abs(mass - 1) < 1e-4


def test_phi_star_bounded_by_centre():
    r = np.linspace(0, 50, 2001)
    for m in (1, 2):
        p = phi_star(r, m)
        assert np.all(np.abs(p) <= p[0])
        assert np.all(np.diff(p[:20]) < 0)


def test_scaling_law():
    xh = np.linspace(0, 5, 11)
    for t in (1.0, 3.0, 17.0):
        assert np.allclose(phi(xh, t), t ** (-2 / 3) * phi_star(xh * t ** (-1 / 3), 2), rtol=1e-10, atol=0)
    assert phi_half_width(8.0) / phi_half_width(1.0) == pytest.approx(2.0, rel=1e-2)


def test_ansatz():
    x = np.linspace(-5, 5, 7)
    assert np.array_equal(asymptotic_state(x, [0.3, 0.1], 2.0, AsymptoticAnsatz(0.0)), u0(x))
    ans = AsymptoticAnsatz(1.7)
    d1 = ans(1.0, [0.0, 0.0], 5.0) - u0(1.0)
    d8 = ans(1.0, [0.0, 0.0], 40.0) - u0(1.0)
    assert d8 / d1 == pytest.approx(0.25, rel=1e-12)
    with pytest.raises(ValidationError):
        asymptotic_state(0.0, 0.0, 0.5, ans)
    with pytest.raises(ValidationError):
        AsymptoticAnsatz(1.0, d=2)
