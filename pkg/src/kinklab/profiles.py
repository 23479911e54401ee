"""
Closed-form profiles
====================

The tanh kink of the Cahn-Hilliard equation, its derivative, the potential
of the linearised operator H = -d^2/dx^2 + 1 + V, and the anomalous
t^{1/3} similarity profile phi* together with the asymptotic ansatz of a
relaxed front.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import UnsupportedDimension, ValidationError


def sech2_half(x):
    """``sech^2(x/2)`` written as ``4 e^{-|x|} / (1 + e^{-|x|})^2`` (no overflow)."""
    e = np.exp(-np.abs(np.asarray(x, dtype=float)))
    return 4.0 * e / (1.0 + e) ** 2


def u0(x):
    """Kink ``tanh(x/2)``."""
    return np.tanh(0.5 * np.asarray(x, dtype=float))


def du0(x):
    """Kink derivative ``1 / (2 cosh^2(x/2))``."""
    return 0.5 * sech2_half(x)


def potential(x):
    """``V = -3/2 sech^2(x/2) = -3 du0``."""
    return -1.5 * sech2_half(x)


def potential_d1(x):
    """``V' = 3/2 sech^2(x/2) tanh(x/2)``."""
    return 1.5 * sech2_half(x) * u0(x)


def potential_d2(x):
    """``V'' = 3/4 sech^2(x/2) (sech^2(x/2) - 2 tanh^2(x/2))``."""
    s = sech2_half(x)
    th = u0(x)
    return 0.75 * s * (s - 2.0 * th * th)


@dataclass(frozen=True)
class KinkValues:
    u0: np.ndarray | float
    du0: np.ndarray | float
    V: np.ndarray | float


def kink_family(x) -> KinkValues:
    """Kink, derivative and potential at ``x`` (scalar or array)."""
    vals = (u0(x), du0(x), potential(x))
    if np.ndim(x) == 0:
        vals = tuple(float(v) for v in vals)
    return KinkValues(*vals)


# ---------------------------------------------------------------------------
# Similarity profile
# ---------------------------------------------------------------------------

K_MAX = 5.0  # exp(-K_MAX^3/3) ~ 7e-19
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _k_rule(r_max: float):
    """Composite Gauss-Legendre rule on [0, K_MAX], panels <= half a period."""
    width = 0.5 if r_max <= 0 else min(0.5, np.pi / r_max)
    n = max(10, int(np.ceil(K_MAX / width)))
    edges = np.linspace(0.0, K_MAX, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    k = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return k, w


def phi_star(radius, transverse_dim: int = 2):
    """Similarity profile ``int exp(i k.xh - |k|^3/3) dk / (2 pi)^m``.

    Parameters
    ----------
    radius : float or array_like
        ``|xh| >= 0``.
    transverse_dim : int
        ``m = d - 1``; only 1 (cosine reduction) and 2 (Bessel J0
        reduction) are supported.

    Returns
    -------
    float or ndarray
        Profile values, same shape as ``radius``.
    """
    if transverse_dim not in (1, 2):
        raise UnsupportedDimension(f"phi_star supports transverse_dim 1 or 2, got {transverse_dim}")
    r = np.abs(np.asarray(radius, dtype=float))
    flat = r.ravel()
    out = np.empty_like(flat)
    order = np.argsort(flat)
    # evaluate in chunks of increasing radius so each chunk gets a rule
    # resolving its own oscillation
    for chunk in np.array_split(order, max(1, flat.size // 256)):
        if chunk.size == 0:
            continue
        k, w = _k_rule(flat[chunk].max())
        damp = np.exp(-k ** 3 / 3.0) * w
        kr = np.outer(flat[chunk], k)
        if transverse_dim == 1:
            out[chunk] = np.cos(kr) @ damp / np.pi
        else:
            out[chunk] = special.j0(kr) @ (k * damp) / (2.0 * np.pi)
    out = out.reshape(r.shape)
    return float(out) if out.ndim == 0 else out


def phi(xh_radius, t, d: int = 3):
    """Self-similar transverse profile ``t^{-(d-1)/3} phi*(|xh| t^{-1/3})``."""
    t = float(t)
    return t ** (-(d - 1) / 3.0) * phi_star(np.asarray(xh_radius) * t ** (-1.0 / 3.0), d - 1)


def phi_half_width(t: float, d: int = 3) -> float:
    """Radius at which ``phi(., t)`` drops to half its centre value."""
    from scipy.optimize import brentq

    c = phi(0.0, t, d)
    hi = 1.0
    while phi(hi, t, d) > 0.5 * c:
        hi *= 2.0
    return brentq(lambda r: phi(r, t, d) - 0.5 * c, 0.0, hi, xtol=1e-13, rtol=1e-13)


@dataclass(frozen=True)
class AsymptoticAnsatz:
    """Relaxed-front ansatz ``u0(x) + (A/2) du0(x) phi(xh, t)``.

    Attributes
    ----------
    A : float
        Mass of the perturbation, ``int h``.
    d : int
        Spatial dimension (>= 3).
    """

    A: float
    d: int = 3

    def __post_init__(self):
        if self.d < 3:
            raise ValidationError(f"ansatz needs d >= 3, got {self.d}")
        if self.d - 1 > 2:
            raise UnsupportedDimension(f"profile phi* is implemented for d <= 3, got {self.d}")

    def __call__(self, x, xh, t):
        return asymptotic_state(x, xh, t, self)


def asymptotic_state(x, xh, t, ansatz: AsymptoticAnsatz):
    """Evaluate the ansatz at ``x`` (normal coordinate), transverse point ``xh``.

    ``xh`` is a point of R^{d-1} (trailing axis of length d-1) or directly its
    Euclidean norm.  Requires ``t >= 1``.
    """
    if t < 1:
        raise ValidationError(f"asymptotic_state needs t >= 1, got {t}")
    xh = np.asarray(xh, dtype=float)
    if xh.ndim >= 1 and xh.shape[-1] == ansatz.d - 1:
        rad = np.linalg.norm(xh, axis=-1)
    else:
        rad = np.abs(xh)
    base = u0(x)
    if ansatz.A == 0:
        return base
    return base + 0.5 * ansatz.A * du0(x) * phi(rad, t, ansatz.d)
