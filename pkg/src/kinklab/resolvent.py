"""
Resolvent of D_k H_k
====================

The matrix ``Omega = z^- u^+`` of pairings between the decaying solution
families, its determinant (whose zero in ``tau`` is the eigenvalue pole
``p(k)``) and the resolvent kernel

    R(x, y) = -U^+(x) Omega^{-1} Z^-(y)      for y < x,
    R(x, y) = R(-x, -y)                       for y > x,

of ``(zeta - D_k H_k)^{-1}``.

Evaluated literally, the product above loses ``e^{min(|x|, |y|)}`` digits
when both points lie on the same side of the kink, because ``U^+`` and
``Z^-`` are then dominated by a growing mode that must cancel.  On those
half-lines ``Omega^{-1} Z^-`` and ``U^+ Omega^{-1}`` are instead expanded in
the reflected families ``z^+`` and ``u^-``, which are accurate there; the
coefficient of the dominant mode in the second column is zero by the
pairing identities and is set to zero exactly.  Within ``BLEND_WIDTH`` of the
kink, where the literal product is still accurate, the two forms are blended
with a smooth weight so that the kernel carries no seam at ``x = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import AtPole, DegenerateSolutions, NoRoot, ValidationError
from .homogeneous import (
    DEFAULT_RTOL,
    DEFAULT_X0,
    J_REFLECT,
    HomogeneousSolutionSet,
    SpectralParameters,
    shoot_u_plus,
    shoot_z_minus,
    spectral_parameters,
    z_derivatives,
    zeta_of,
)

AT_POLE_THRESHOLD = 1e-10
PAIRING_WINDOW = 2.0
PAIRING_POINTS = 9
CONSTANCY_TOL = 1e-6
BLEND_WIDTH = 2.0


@dataclass
class ResolventAssembly:
    """``Omega`` and ``det Omega`` at one spectral point.

    ``pairings`` holds the constant pairings used by the stable kernel,
    ``A[n, j] = z_n^- . u_j^+`` and ``B[n, m] = z_n^- . u_m^-`` for
    ``n, m, j = 1..3``.
    """

    params: SpectralParameters
    Omega: np.ndarray
    detOmega: complex
    solset: HomogeneousSolutionSet | None = None
    pairings: dict = field(default_factory=dict, repr=False)
    x0: float = DEFAULT_X0
    rtol: float = DEFAULT_RTOL


@dataclass(frozen=True)
class PoleReport:
    """Zero ``p`` of ``tau -> det Omega(k, tau)`` and ``zeta(k, p)``."""

    k: float
    p: complex
    zeta0_from_pole: complex
    iterations: int = 0


def _median(a, axis=0):
    return np.median(a.real, axis=axis) + 1j * np.median(a.imag, axis=axis)


def _window():
    return np.linspace(-PAIRING_WINDOW, PAIRING_WINDOW, PAIRING_POINTS)


def _check_constancy(P, what):
    spread = np.max(np.abs(P - _median(P)[None]), axis=0)
    scale = np.maximum(1.0, np.abs(_median(P)))
    if np.any(spread > CONSTANCY_TOL * scale):
        raise DegenerateSolutions(f"{what} pairings vary across the window by {np.max(spread / scale):.2e}")


def pairing_tables(k, tau, x0=DEFAULT_X0, rtol=DEFAULT_RTOL, check=True):
    """Constant pairings ``A[n, j] = z_n^- . u_j^+`` and ``B[n, m] = z_n^- . u_m^-``.

    Indices run over ``1..3``: the fourth solutions are defined only modulo
    the others and, shot from ``x0``, are swamped by that freedom.  Returns
    arrays of shape ``(len(tau), 3, 3)``, each the median over a window
    around the kink.
    """
    xs = _window()
    js = (1, 2, 3)
    u = shoot_u_plus(k, tau, js, xs, x0, rtol)  # (x, t, j, 4)
    z = shoot_z_minus(k, tau, js, xs, x0, rtol)
    u_minus = u[::-1] * J_REFLECT  # u_m^-(x) = J u_m^+(-x); xs is symmetric
    A = np.einsum("xtna,xtja->xtnj", z, u)
    B = np.einsum("xtna,xtma->xtnm", z, u_minus)
    if check:
        _check_constancy(A[:, :, :2, :2], "Omega")
    return _median(A), _median(B)


def omega_batch(k, tau, x0=DEFAULT_X0, rtol=DEFAULT_RTOL):
    """``Omega`` for a batch of ``tau``; shape ``(len(tau), 2, 2)``."""
    tau = np.atleast_1d(np.asarray(tau, dtype=complex))
    xs = _window()
    u = shoot_u_plus(k, tau, (1, 2), xs, x0, rtol)
    z = shoot_z_minus(k, tau, (1, 2), xs, x0, rtol)
    P = np.einsum("xtna,xtja->xtnj", z, u)
    _check_constancy(P, "Omega")
    return _median(P)


def det_omega(k, tau, x0=DEFAULT_X0, rtol=DEFAULT_RTOL):
    """``det Omega(k, tau)``; scalar in, scalar out, otherwise vectorised."""
    scalar = np.ndim(tau) == 0
    d = np.linalg.det(omega_batch(k, tau, x0, rtol))
    return complex(d[0]) if scalar else d


def det_omega_series(k, tau):
    """Truncated expansion ``k^2 + tau^2 + 2 i tau^3 + (7/3) i tau k^2``."""
    tau = np.asarray(tau, dtype=complex)
    return k * k + tau ** 2 + 2j * tau ** 3 + (7.0 / 3.0) * 1j * tau * k * k


def omega(params: SpectralParameters, solset: HomogeneousSolutionSet | None = None, x0=DEFAULT_X0, rtol=DEFAULT_RTOL):
    """Assemble ``Omega``, ``det Omega`` and the pairing tables at ``params``.

    With ``solset`` given, ``Omega`` is the median over grid nodes within the
    pairing window of the sampled pairings; otherwise the solutions are shot
    directly on the window.

    Raises
    ------
    DegenerateSolutions
        If the pairings are not constant across the window.
    """
    A, B = pairing_tables(params.k, params.tau, x0, rtol)
    A, B = A[0], B[0]
    if solset is not None:
        x = solset.x
        near = np.abs(x) <= PAIRING_WINDOW
        Ps = np.einsum("nxa,jxa->xnj", solset.z_minus[:2][:, near], solset.u_plus[:2][:, near])
        _check_constancy(Ps, "Omega")
        Om = _median(Ps)
    else:
        Om = A[:2, :2]
    return ResolventAssembly(params, Om, complex(np.linalg.det(Om)), solset, {"A": A, "B": B}, x0, rtol)


def locate_pole(k: float, initial_guess: complex | None = None, x0=DEFAULT_X0, rtol=DEFAULT_RTOL) -> PoleReport:
    """Zero of ``det Omega(k, .)`` near ``i k`` by secant iteration.

    Raises
    ------
    ValidationError
        If ``k <= 0``.
    NoRoot
        If the iteration fails or leaves ``|tau - i k| <= k/2``.
    """
    if not k > 0:
        raise ValidationError(f"locate_pole needs k > 0, got {k}")
    guess = 1j * k if initial_guess is None else complex(initial_guess)
    count = [0]

    def f(t):
        count[0] += 1
        if abs(t - 1j * k) > 0.5 * k:
            raise NoRoot(f"secant iterate {t} left the neighbourhood of i k")
        return det_omega(k, t, x0, rtol)

    try:
        p = optimize.newton(f, guess, x1=guess * (1 + 1e-3), tol=1e-14 * k, maxiter=50)
    except RuntimeError as exc:
        raise NoRoot(f"secant iteration failed at k={k}: {exc}") from exc
    p = complex(p)
    if abs(p - 1j * k) > 0.5 * k:
        raise NoRoot(f"root {p} outside |tau - i k| <= k/2")
    return PoleReport(float(k), p, complex(zeta_of(k, p)), count[0])


# ---------------------------------------------------------------------------
# Stable kernel factors
# ---------------------------------------------------------------------------


@dataclass
class KernelFactors:
    """Low-rank factors of ``R`` on a symmetric set of nodes, batched over ``tau``.

    For ``y < x``:  ``R = -sum_i F[., x, i] * (Ghat[., y, i] if x >= 0 else G[., y, i])``
    where ``F = U^+`` (``x >= 0``) or ``U^+ Omega^{-1}`` (``x < 0``),
    ``Ghat = Omega^{-1} Z^-`` and ``G = Z^-`` (used only for ``y < 0``).
    """

    k: float
    tau: np.ndarray
    nodes: np.ndarray
    F: np.ndarray
    Ghat: np.ndarray
    G: np.ndarray
    detOmega: np.ndarray

    def matrix(self) -> np.ndarray:
        """``R(x_a, x_b)`` for all node pairs; shape ``(len(tau), N, N)``."""
        return self._assemble("tai,tbi->tab")

    def weighted_sum(self, c) -> np.ndarray:
        """``sum_t c[t] R_t(x_a, x_b)`` without forming the per-``tau`` matrices."""
        c = np.asarray(c, dtype=complex)
        return self._assemble("t,tai,tbi->ab", c)

    def _assemble(self, spec, *coef):
        x = self.nodes
        N = x.size
        lower = np.where(x[:, None] >= 0, 1.0, 0.0)
        R_hat = -np.einsum(spec, *coef, self.F, self.Ghat, optimize=True)
        R_raw = -np.einsum(spec, *coef, self.F, self.G, optimize=True)
        R_low = lower * R_hat + (1 - lower) * R_raw
        below = x[None, :] <= x[:, None]  # y <= x
        rev = np.arange(N)[::-1]
        R_up = R_low[..., rev, :][..., rev]  # R(-x, -y)
        return np.where(below, R_low, R_up)


def _blend(x):
    """C-infinity weight: 1 at ``x = 0``, 0 for ``|x| >= BLEND_WIDTH``."""
    t = np.clip(1.0 - np.abs(x) / BLEND_WIDTH, 0.0, 1.0)
    f = lambda s: np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
    return f(t) / (f(t) + f(1.0 - t))


def _second_column_coefficients(A, B, Oi):
    """Expansion coefficients of the cancelling second columns.

    ``(U^+ Omega^{-1})_2 = sum_m d_m u_m^-`` on ``x < 0`` and
    ``(Omega^{-1} z^-)_2 = sum_m c_m z_m^+`` on ``y > 0``, ``m = 1..3``.  Each
    is fitted by least squares against all available pairings, using
    ``z^+_n . u^+_j = -B[n, j]`` and ``z^+_n . u^-_m = -A[n, m]``.
    """
    nt = A.shape[0]
    d = np.empty((nt, 3), dtype=complex)
    c = np.empty((nt, 3), dtype=complex)
    for t in range(nt):
        a, b, oi = A[t], B[t], Oi[t]
        Md = np.vstack([b, -a])
        rd = np.concatenate([a[:, :2] @ oi[:, 1], -b[:, :2] @ oi[:, 1]])
        d[t] = np.linalg.lstsq(Md, rd, rcond=None)[0]
        Mc = np.vstack([-b.T, -a.T])
        rc = np.concatenate([oi[1] @ a[:2, :], oi[1] @ b[:2, :]])
        c[t] = np.linalg.lstsq(Mc, rc, rcond=None)[0]
    return c, d


def kernel_factors(k, tau, nodes, x0=DEFAULT_X0, rtol=DEFAULT_RTOL, check_pole=True, y_deriv=0) -> KernelFactors:
    """Build :class:`KernelFactors` on ``nodes`` (must be symmetric about 0).

    With ``y_deriv = n`` (0 to 3) the factors represent ``d^n R / dy^n``: the
    ``y``-dependence sits entirely in ``Z^-`` and is differentiated exactly
    through :func:`z_derivatives`.  The blend weight is not differentiated;
    it multiplies two representations of one function, so its derivative
    terms are rounding-level.  Only even orders keep the ``R(-x, -y)``
    reflection used by :meth:`KernelFactors.matrix` exact.  A sequence of
    orders returns one :class:`KernelFactors` per order from a single
    shooting pass.

    Raises
    ------
    ValidationError
        If ``nodes`` is not symmetric.
    AtPole
        If ``|det Omega| < 1e-10`` at some ``tau`` (with ``check_pole``).
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=complex))
    x = np.asarray(nodes, dtype=float)
    if not np.allclose(x, -x[::-1], atol=1e-12):
        raise ValidationError("kernel nodes must be symmetric about 0")
    A, B = pairing_tables(k, tau, x0, rtol)
    Om = A[:, :2, :2]
    det = np.linalg.det(Om)
    if check_pole and np.any(np.abs(det) < AT_POLE_THRESHOLD):
        raise AtPole(f"|det Omega| = {np.min(np.abs(det)):.2e} below {AT_POLE_THRESHOLD}")
    Oi = np.linalg.inv(Om)
    c, d = _second_column_coefficients(A, B, Oi)

    js = (1, 2, 3)
    U = np.transpose(shoot_u_plus(k, tau, js, x, x0, rtol)[..., 0], (1, 0, 2))  # (t, x, 3)
    zjet = z_derivatives(shoot_z_minus(k, tau, js, x, x0, rtol), k, x[:, None, None])
    # reflected families: first component of u_m^-(x) is U_m^+(-x), fourth
    # component of z_m^+(y) is Z_m^-(-y) (even derivatives reflect likewise)
    Um = U[:, ::-1]
    F = np.einsum("txj,tji->txi", U[..., :2], Oi)
    neg, pos = x < 0, x > 0
    # hand over from the literal product to the expansion smoothly, so the
    # two representations' rounding-level mismatch leaves no seam
    w = _blend(x)[None]
    F[:, neg, 1] = (w * F[..., 1] + (1 - w) * np.einsum("txm,tm->tx", Um, d))[:, neg]
    F[:, ~neg] = U[:, ~neg, :2]

    out = []
    for n in np.atleast_1d(y_deriv):
        Z = np.transpose(zjet[..., int(n)], (1, 0, 2))
        Zp = Z[:, ::-1]
        Ghat = np.einsum("tij,txj->txi", Oi, Z[..., :2])
        Ghat[:, pos, 1] = (w * Ghat[..., 1] + (1 - w) * np.einsum("txm,tm->tx", Zp, c))[:, pos]
        G = np.where(neg[None, :, None], Z[..., :2], 0.0)
        out.append(KernelFactors(float(np.real(k)), tau, x, F, Ghat, G, det))
    return out[0] if np.ndim(y_deriv) == 0 else tuple(out)


def resolvent_kernel(assembly: ResolventAssembly, x, y):
    """``R(x, y)`` at ``assembly.params`` for scalar or broadcastable ``x, y``.

    Raises
    ------
    AtPole
        If ``|det Omega| < 1e-10``.
    """
    if abs(assembly.detOmega) < AT_POLE_THRESHOLD:
        raise AtPole(f"|det Omega| = {abs(assembly.detOmega):.2e} below {AT_POLE_THRESHOLD}")
    xb, yb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    pts = np.unique(np.abs(np.concatenate([xb.ravel(), yb.ravel()])))
    nodes = np.concatenate([-pts[::-1][pts[::-1] > 0], pts])
    kf = kernel_factors(assembly.params.k, assembly.params.tau, nodes, assembly.x0, assembly.rtol, check_pole=False)
    R = kf.matrix()[0]
    ix = np.searchsorted(nodes, xb)
    iy = np.searchsorted(nodes, yb)
    out = R[ix, iy]
    return complex(out) if out.ndim == 0 else out


def resolvent_matrix(k, tau, nodes, x0=DEFAULT_X0, rtol=DEFAULT_RTOL) -> np.ndarray:
    """``R(x_a, x_b)`` on symmetric ``nodes`` at a single ``tau``."""
    return kernel_factors(k, tau, nodes, x0, rtol).matrix()[0]


def assemble_at(k, tau, x0=DEFAULT_X0, rtol=DEFAULT_RTOL) -> ResolventAssembly:
    """Shortcut for ``omega(spectral_parameters(k, tau))``."""
    return omega(spectral_parameters(k, tau), None, x0, rtol)
