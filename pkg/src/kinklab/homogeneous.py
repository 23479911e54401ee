"""
Homogeneous solutions of the 4x4 first-order system
===================================================

The resolvent equation ``(zeta - D_k H_k) u = 0`` written as ``u' = A u`` for
``u = (U, U', U'', U''')`` with the companion matrix ``A(zeta, k, x)``, its
adjoint ``z' = -z A``, the spectral coordinates ``(k, tau)`` and the
exponentially normalised solutions

* ``u_j^+ ~ e^{mu_j x} v_j`` as ``x -> +inf``,
* ``z_j^- ~ e^{-mu_j x} w_j`` as ``x -> -inf``,

constructed by shooting the renormalised variables ``e^{-mu x} u`` and
``e^{mu x} z`` from asymptotic data.  ``u_j^-`` and ``z_j^+`` follow from the
reflection symmetry ``x -> -x`` of the problem.

All routines are vectorised over a batch of spectral points sharing ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853

from .errors import BranchCut, DegenerateSolutions, StiffBlowup, ValidationError
from .numerics import Grid1D
from .profiles import potential, potential_d1, potential_d2

DEFAULT_X0 = 25.0
DEFAULT_RTOL = 1e-11
COMPOSITE_THRESHOLD = 1e-6
BLOWUP_GUARD = 1e250
SEGMENT = 2.0
FILTER_EDGE = 0.0
J_REFLECT = np.array([1.0, -1.0, 1.0, -1.0])


# ---------------------------------------------------------------------------
# Spectral parameters
# ---------------------------------------------------------------------------


def _check_domain(k, tau):
    k = np.asarray(k, dtype=complex)
    tau = np.asarray(tau, dtype=complex)
    on_k_cut = (np.abs(k.real) < 1e-15) & (np.abs(k.imag) >= 1 / np.sqrt(2))
    on_tau_cut = (np.abs(tau.real) < 1e-15) & (np.abs(tau.imag) >= 0.5)
    if np.any(on_k_cut):
        raise BranchCut("k lies on the excluded rays +-i[1/sqrt(2), inf)")
    if np.any(on_tau_cut):
        raise BranchCut("tau lies on the excluded rays +-i[1/2, inf)")


def zeta_of(k, tau):
    """``zeta = k^2 + k^4 + (1 + 2k^2)^2 tau^2``."""
    k2 = np.asarray(k) ** 2
    return k2 + k2 * k2 + (1 + 2 * k2) ** 2 * np.asarray(tau) ** 2


def tau_of(k, zeta):
    """Inverse of :func:`zeta_of` on the branch ``Im tau >= 0``."""
    k2 = np.asarray(k, dtype=complex) ** 2
    a = (1 + 2 * k2) ** 2
    return 1j * np.sqrt(-(np.asarray(zeta, dtype=complex) - k2 - k2 * k2) / a)


def exponents(k, tau) -> np.ndarray:
    """``(mu_1, mu_2, -mu_2, -mu_1)`` along the trailing axis.

    ``mu_1 = -sqrt(1+2k^2) sqrt(1/2 + s/2)`` and
    ``mu_2 = sqrt(1+2k^2) i tau / sqrt(1/2 + s/2)`` with ``s = sqrt(1+4 tau^2)``
    (principal roots).
    """
    k = np.asarray(k, dtype=complex)
    tau = np.asarray(tau, dtype=complex)
    c = np.sqrt(1 + 2 * k * k)
    r = np.sqrt(0.5 + 0.5 * np.sqrt(1 + 4 * tau * tau))
    m1 = -c * r
    m2 = c * 1j * tau / r
    return np.stack(np.broadcast_arrays(m1, m2, -m2, -m1), axis=-1)


def right_vector(mu):
    """``v(mu) = (1, mu, mu^2, mu^3)``."""
    mu = np.asarray(mu, dtype=complex)
    return np.stack([np.ones_like(mu), mu, mu ** 2, mu ** 3], axis=-1)


def right_vector_dmu(mu):
    mu = np.asarray(mu, dtype=complex)
    return np.stack([np.zeros_like(mu), np.ones_like(mu), 2 * mu, 3 * mu ** 2], axis=-1)


def left_vector(mu, k):
    """``w(mu) = (mu(mu^2 - 1 - 2k^2), mu^2 - 1 - 2k^2, mu, 1)``."""
    mu = np.asarray(mu, dtype=complex)
    c = 1 + 2 * np.asarray(k, dtype=complex) ** 2
    return np.stack([mu * (mu ** 2 - c), mu ** 2 - c, mu, np.ones_like(mu)], axis=-1)


def left_vector_dmu(mu, k):
    mu = np.asarray(mu, dtype=complex)
    c = 1 + 2 * np.asarray(k, dtype=complex) ** 2
    return np.stack([3 * mu ** 2 - c, 2 * mu, np.ones_like(mu), np.zeros_like(mu)], axis=-1)


@dataclass(frozen=True)
class SpectralParameters:
    """The point ``lambda = (k, tau)`` with all derived quantities.

    Attributes
    ----------
    k, tau : complex
    zeta : complex
        ``k^2 + k^4 + (1+2k^2)^2 tau^2``.
    mu : ndarray, shape (4,)
        ``(mu_1, mu_2, mu_3, mu_4) = (mu_1, mu_2, -mu_2, -mu_1)``.
    v, w : ndarray, shape (4, 4)
        Row ``j`` holds the right/left eigenvector of ``A_inf`` for ``mu_j``.
    """

    k: complex
    tau: complex
    zeta: complex
    mu: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @property
    def a(self) -> complex:
        return (1 + 2 * self.k ** 2) ** 2


def spectral_parameters(k, tau) -> SpectralParameters:
    """Derived spectral data at ``(k, tau)``; raises :class:`BranchCut` on the cuts."""
    _check_domain(k, tau)
    k = complex(k)
    tau = complex(tau)
    mu = exponents(k, tau)
    return SpectralParameters(k, tau, complex(zeta_of(k, tau)), mu, right_vector(mu), left_vector(mu, k))


# ---------------------------------------------------------------------------
# System matrices
# ---------------------------------------------------------------------------


def coefficients(k, zeta, x):
    """Last-row entries ``(a0, a1, a2)`` of the companion matrix at ``x``."""
    k2 = np.asarray(k) ** 2
    V = potential(x)
    a0 = zeta - k2 - k2 * k2 - k2 * V + potential_d2(x)
    a1 = 2.0 * potential_d1(x)
    a2 = 1 + 2 * k2 + V
    return a0, a1, a2


def system_matrix(params: SpectralParameters, x) -> np.ndarray:
    """``A(zeta, k, x)``, shape ``x.shape + (4, 4)``."""
    x = np.asarray(x, dtype=float)
    a0, a1, a2 = coefficients(params.k, params.zeta, x)
    A = np.zeros(x.shape + (4, 4), dtype=complex)
    A[..., 0, 1] = A[..., 1, 2] = A[..., 2, 3] = 1.0
    A[..., 3, 0] = a0
    A[..., 3, 1] = a1
    A[..., 3, 2] = a2
    return A


def asymptotic_matrix(params: SpectralParameters) -> np.ndarray:
    k2 = params.k ** 2
    A = np.zeros((4, 4), dtype=complex)
    A[0, 1] = A[1, 2] = A[2, 3] = 1.0
    A[3, 0] = params.zeta - k2 - k2 * k2
    A[3, 2] = 1 + 2 * k2
    return A


def perturbation_matrix(params: SpectralParameters, x) -> np.ndarray:
    """``R(x) = A(x) - A_inf``; decays like ``e^{-|x|}``."""
    return system_matrix(params, x) - asymptotic_matrix(params)


# ---------------------------------------------------------------------------
# Batched shooting engine
# ---------------------------------------------------------------------------
#
# Integration runs in the coordinates of the composite eigenbasis of A_inf,
#   T = [v(mu_1), v(mu_2), (v(mu_3) - v(mu_2)) / (mu_3 - mu_2), v(mu_4)],
# which stays well conditioned when mu_2 and mu_3 collide.  There A_inf is
# block diagonal and A - A_inf = e_4 r(x)^T has rank one, so subdominant
# modes are driven only by the small perturbation r(x) = O(e^{-|x|}) and
# never by rounding of the dominant components.


def modal_basis(mu):
    """``T`` (columns as above) and its inverse, each of shape ``(n, 4, 4)``."""
    mu = np.atleast_2d(mu)
    m2, m3 = mu[:, 1], mu[:, 2]
    dd = np.stack([np.zeros_like(m2), np.ones_like(m2), m2 + m3, m2 * m2 + m2 * m3 + m3 * m3], axis=-1)
    T = np.stack([right_vector(mu[:, 0]), right_vector(m2), dd, right_vector(mu[:, 3])], axis=-1)
    return T, np.linalg.inv(T)


def _expm1_ratio(delta, x):
    """``expm1(delta x) / delta`` with its series limit for tiny ``delta``."""
    delta = np.asarray(delta, dtype=complex)
    small = np.abs(delta) < COMPOSITE_THRESHOLD
    safe = np.where(small, 1.0, delta)
    series = x * (1 + 0.5 * delta * x + (delta * x) ** 2 / 6.0)
    return np.where(small, series, np.expm1(delta * x) / safe)


class _Batch:
    """Flattened batch of independent renormalised systems in modal coordinates.

    Each row carries its own exponents ``mu`` and renormalisation exponent
    ``m``; ``k`` is shared.
    """

    def __init__(self, k, mu, m):
        self.k2 = complex(k) ** 2
        self.mu = np.atleast_2d(np.asarray(mu, dtype=complex))
        self.m = np.asarray(m, dtype=complex).ravel()
        self.T, self.Tinv = modal_basis(self.mu)
        self.q = self.Tinv[:, :, 3]

    def _p(self, x):
        V = potential(x)
        r = np.array([-self.k2 * V + potential_d2(x), 2.0 * potential_d1(x), V, 0.0])
        return np.einsum("a,nai->ni", r, self.T)

    def rhs_u(self, x, y):
        c = y.reshape(-1, 4)
        mu, m = self.mu, self.m
        pc = np.sum(self._p(x) * c, axis=1)
        out = (mu - m[:, None]) * c
        out[:, 1] += c[:, 2]
        out += self.q * pc[:, None]
        return out.ravel()

    def rhs_z(self, x, y):
        d = y.reshape(-1, 4)
        mu, m = self.mu, self.m
        qd = np.sum(self.q * d, axis=1)
        out = (m[:, None] - mu) * d
        out[:, 2] -= d[:, 1]
        out -= self._p(x) * qd[:, None]
        return out.ravel()

    def to_u(self, c, x):
        """Modal ``c`` of shape ``(len(x), n, 4)`` to actual u-vectors."""
        u = np.einsum("nai,sni->sna", self.T, c)
        return u * np.exp(np.multiply.outer(x, self.m))[..., None]

    def to_z(self, d, x):
        """Modal ``d`` of shape ``(len(x), n, 4)`` to actual adjoint vectors."""
        z = np.einsum("sni,nia->sna", d, self.Tinv)
        return z * np.exp(-np.multiply.outer(x, self.m))[..., None]


def _march(fun, a, y, t_pts, rtol, atol, step=None):
    """Integrate from ``a`` through the sorted points ``t_pts``.

    Every point is a step end rather than a dense-output evaluation, so the
    error varies smoothly from point to point and survives finite
    differencing of the samples.  Returns the states at ``t_pts`` and the
    last step size.
    """
    out = np.empty((len(t_pts), y.size), dtype=complex)
    t = a
    for n, b in enumerate(t_pts):
        if b != t:
            solver = DOP853(fun, t, y, b, rtol=rtol, atol=atol,
                            first_step=None if step is None else min(step, abs(b - t)))
            while solver.status == "running":
                msg = solver.step()
                if solver.status == "failed":
                    raise StiffBlowup(f"shooting integrator failed: {msg}")
            if solver.step_size is not None and abs(b - t) > (solver.step_size or 0):
                step = solver.step_size
            elif step is None:
                step = abs(b - t)
            t, y = b, solver.y
        out[n] = y
    return out, step


def _integrate(batch: _Batch, side: str, y0, x_from, x_to, xs_out, rtol=DEFAULT_RTOL, lower=None):
    """Integrate the modal system and sample it at ``xs_out``.

    The interval is cut at multiples of a step ``h <= SEGMENT``; on each segment the
    absolute tolerance follows the local size ``e^{-|x|}`` of the
    perturbation, so components seeded at ``O(e^{-|x_from|})`` keep full
    relative accuracy without chasing the rounding floor near ``x = 0``.

    ``lower`` (shape ``(nrows, 3)``) names, for solution index ``j >= 2``,
    the rows holding indices ``1 .. j-1`` at the same spectral point (``-1``
    if absent).  Such a solution is defined only modulo faster-decaying ones;
    when an exponent gap exceeds the unit decay rate of the potential the
    freedom pinned at ``x_from`` grows like ``e^{(gap - 1)|x_from|}``.  At
    every cut down to ``FILTER_EDGE`` on the starting side, the multiples of
    those rows that zero the matching modal components are subtracted, and
    outputs already produced are corrected by the same multiples, so a
    single representative holds on the whole line.  Returns modal vectors
    of shape ``(len(xs_out), nrows, 4)``.
    """
    y = np.asarray(y0, dtype=complex).reshape(-1, 4)
    shape = y.shape
    xs_out = np.asarray(xs_out, dtype=float)
    out = np.empty((xs_out.size,) + shape, dtype=complex)
    sign = 1.0 if x_to >= x_from else -1.0
    s = sign * (xs_out - x_from)  # distance travelled when reaching each output
    out[s <= 0] = y
    done = s <= 0
    fun = batch.rhs_u if side == "u" else batch.rhs_z
    step = None
    # filtering groups by level (number of lower indices), processed in
    # increasing level so every lower row is already filtered at a cut;
    # within a level all spectral points are handled at once, with slots
    # whose gap does not exceed 1 masked out
    levels = []
    gap = 0.0
    if lower is not None:
        nlow = np.sum(lower >= 0, axis=1)
        for n in range(1, lower.shape[1] + 1):
            rr = np.nonzero(nlow == n)[0]
            if rr.size == 0:
                continue
            lows = lower[rr, :n]
            g = (batch.m[rr][:, None] - batch.m[lows]).real
            active = g > 1.0 + 1e-9
            if np.any(active):
                levels.append((rr, lows, active))
                gap = max(gap, float(np.max(g[active])))
    # cuts at multiples of h, so one falls on x = 0 where the representative
    # is pinned; wide gaps get short segments to bound the cancellation
    h = min(SEGMENT, SEGMENT / gap) if levels else SEGMENT
    lo, hi = sorted((x_from, x_to))
    inner = h * np.arange(np.floor(lo / h) + 1, np.ceil(hi / h))
    inner = inner[(inner > lo) & (inner < hi)]
    cuts = np.concatenate([[0.0], np.sort(sign * (inner - x_from)), [abs(x_to - x_from)]])
    for sa, sb in zip(cuts[:-1], cuts[1:]):
        a, b = x_from + sign * sa, x_from + sign * sb
        if sb == cuts[-1]:
            b = x_to
        pick = np.nonzero((s > sa) & (s <= sb))[0]
        pick = pick[np.argsort(s[pick])]
        lo, hi = min(a, b), max(a, b)
        t_pts = np.clip(xs_out[pick], lo, hi)
        t_eval = t_pts if t_pts.size and t_pts[-1] == b else np.append(t_pts, b)
        near = 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))
        atol = rtol * 1e-3 * max(1.0, float(np.max(np.abs(y)))) * np.exp(-near)
        vals, step = _march(fun, a, y.ravel(), t_eval, rtol, atol, step)
        vals = vals.reshape((t_eval.size,) + shape)
        out[pick] = vals[: pick.size]
        done[pick] = True
        y = vals[-1].copy()
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > BLOWUP_GUARD:
            raise StiffBlowup("renormalised solution exceeded the magnitude guard")
        if levels and -sign * b >= FILTER_EDGE:
            di = np.nonzero(done)[0]
            xd = xs_out[di]
            for rr, lows, active in levels:
                n = lows.shape[1]
                A = y[lows][:, :, :n]  # A[t, l, c] = component c of lower row l
                rhs = np.where(active, y[rr, :n], 0.0)
                A = np.where(active[:, :, None] & active[:, None, :], A, 0.0)
                A = A + np.where(active, 0.0, 1.0)[:, :, None] * np.eye(n)[None]
                alpha = np.linalg.solve(np.swapaxes(A, 1, 2), rhs[..., None])[..., 0]
                y[rr] -= np.einsum("tl,tla->ta", alpha, y[lows])
                rate = np.where(active, batch.m[rr][:, None] - batch.m[lows], 0.0)[None]
                coef = alpha[None] * np.exp(-np.abs(xd - b)[:, None, None] * rate)
                out[di[:, None], rr[None]] -= np.einsum("stl,stla->sta", coef, out[di[:, None, None], lows[None]])
    return out


def _u_initial(mu, j: int, X: float):
    """Modal data of ``u_j^+`` at ``x = X``, renormalised by ``e^{-mu_j X}``.

    For ``j = 3`` the composite ``(e^{mu_3 x} v_3 - e^{mu_2 x} v_2) / (mu_3 - mu_2)``
    equals ``e^{mu_3 x} dd + (e^{mu_3 x} - e^{mu_2 x}) / (mu_3 - mu_2) v_2``.
    """
    c = np.zeros((mu.shape[0], 4), dtype=complex)
    if j != 3:
        c[:, j - 1] = 1.0
    else:
        c[:, 1] = _expm1_ratio(mu[:, 1] - mu[:, 2], X)
        c[:, 2] = 1.0
    return c


def _z_scalar_jet(mu, j: int, x: float):
    """Renormalised value and first three derivatives of the scalar asymptote.

    The asymptote of ``Z_j^-`` is ``e^{-mu_j x}`` for ``j != 3`` and the
    composite ``(e^{-mu_3 x} - e^{-mu_2 x}) / (mu_3 - mu_2)`` for ``j = 3``;
    both are multiplied by ``e^{mu_j x}``.
    """
    if j != 3:
        m = mu[:, j - 1]
        return np.stack([np.ones_like(m), -m, m ** 2, -m ** 3], axis=-1)
    m2, m3 = mu[:, 1], mu[:, 2]
    E = -_expm1_ratio(m3 - m2, x)
    # ((-m3)^n - (-m2)^n e^{(m3 - m2) x}) / (m3 - m2), split to avoid cancellation
    dd = [np.zeros_like(m2), -np.ones_like(m2), m2 + m3, -(m2 * m2 + m2 * m3 + m3 * m3)]
    pw = [np.ones_like(m2), -m2, m2 ** 2, -m2 ** 3]
    return np.stack([dd[n] + pw[n] * E for n in range(4)], axis=-1)


_OWN_BLOCK = {1: [0], 2: [1, 2], 3: [1, 2], 4: [3]}


def _z_initial(k, mu, j: int, X: float, T):
    """Modal data of ``z_j^-`` at ``x = -X``, renormalised by ``e^{mu_j x}``.

    The scalar asymptote is lifted to an adjoint vector with the exact
    coefficients of ``A(x)`` rather than those of ``A_inf``.  The two lifts
    differ by a vector of size ``O(e^{-X})`` that is transformed separately,
    so every modal component keeps full relative accuracy.
    """
    x = -X
    jet = _z_scalar_jet(mu, j, x)
    c = 1 + 2 * complex(k) ** 2
    z_inf = np.stack([-jet[:, 3] + c * jet[:, 1], jet[:, 2] - c * jet[:, 0], -jet[:, 1], jet[:, 0]], axis=-1)
    d = np.einsum("na,nai->ni", z_inf, T)
    other = np.ones(4, dtype=bool)
    other[_OWN_BLOCK[j]] = False
    d[:, other] = 0.0
    V, dV = potential(x), potential_d1(x)
    zero = np.zeros_like(jet[:, 0])
    dz = np.stack([V * jet[:, 1] - dV * jet[:, 0], -V * jet[:, 0], zero, zero], axis=-1)
    return d + np.einsum("na,nai->ni", dz, T)


def _batch_for(k, tau, js):
    mu = exponents(k, tau)
    rows_mu = np.repeat(mu, len(js), axis=0)
    m = np.stack([mu[:, j - 1] for j in js], axis=1).ravel()
    return mu, _Batch(k, rows_mu, m)


def _with_lower(js):
    """Indices ``js`` extended by the lower indices they are filtered against."""
    js = tuple(js)
    need = set(js)
    for j in js:
        need |= set(range(1, j))
    full = tuple(sorted(need))
    return full, [full.index(j) for j in js]


def _lower_rows(ntau, full):
    """Row of index ``s + 1`` for slot ``s`` of each row (``-1`` if absent).

    Slot ``s`` also names the modal component zeroed by the filter.
    """
    table = np.full((len(full), 3), -1)
    for r, j in enumerate(full):
        if j >= 2:
            for i in range(1, j):
                table[r, i - 1] = full.index(i)
    base = (np.arange(ntau) * len(full))[:, None, None]
    rows = np.where(table[None] >= 0, base + table[None], -1)
    return rows.reshape(-1, 3)


def shoot_u_plus(k, tau, js, xs, x0=DEFAULT_X0, rtol=DEFAULT_RTOL):
    """``u_j^+`` (full 4-vectors) at the points ``xs`` for a batch of ``tau``.

    Integration starts at ``X = max(x0, max xs)``.  Returns actual (not
    renormalised) values of shape ``(len(xs), len(tau), len(js), 4)``.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=complex))
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    X = max(float(x0), float(xs.max()))
    full, keep = _with_lower(js)
    mu, batch = _batch_for(k, tau, full)
    y0 = np.stack([_u_initial(mu, j, X) for j in full], axis=1).reshape(-1, 4)
    # always reach the kink, where the filtered representative is pinned
    c = _integrate(batch, "u", y0, X, min(float(xs.min()), -FILTER_EDGE), xs, rtol, _lower_rows(tau.size, full))
    return batch.to_u(c, xs).reshape(xs.size, tau.size, len(full), 4)[:, :, keep]


def shoot_z_minus(k, tau, js, xs, x0=DEFAULT_X0, rtol=DEFAULT_RTOL):
    """``z_j^-`` at ``xs``; mirror image of :func:`shoot_u_plus`."""
    tau = np.atleast_1d(np.asarray(tau, dtype=complex))
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    X = max(float(x0), float(-xs.min()))
    full, keep = _with_lower(js)
    mu, batch = _batch_for(k, tau, full)
    T = batch.T.reshape(tau.size, len(full), 4, 4)[:, 0]
    y0 = np.stack([_z_initial(k, mu, j, X, T) for j in full], axis=1).reshape(-1, 4)
    d = _integrate(batch, "z", y0, -X, max(float(xs.max()), FILTER_EDGE), xs, rtol, _lower_rows(tau.size, full))
    return batch.to_z(d, xs).reshape(xs.size, tau.size, len(full), 4)[:, :, keep]


def pairing(z, u):
    """Bilinear pairing ``z . u`` over the trailing axis."""
    return np.sum(z * u, axis=-1)


def z_derivatives(z, k, x):
    """``(Z, Z', Z'', Z''')`` from an adjoint 4-vector ``z`` at ``x``.

    ``x`` must broadcast against ``z[..., 0]``.
    """
    V = potential(x)
    dV = potential_d1(x)
    a2 = 1 + 2 * k * k + V
    Z = z[..., 3]
    Z1 = -z[..., 2]
    Z2 = z[..., 1] + a2 * Z
    Z3 = -z[..., 0] + a2 * Z1 - dV * Z
    return np.stack([Z, Z1, Z2, Z3], axis=-1)


# ---------------------------------------------------------------------------
# Full solution set on a grid
# ---------------------------------------------------------------------------


@dataclass
class HomogeneousSolutionSet:
    """``u_j^+, z_j^-`` for ``j = 1..4`` sampled on a symmetric grid.

    ``u_plus[j-1, i]`` is the 4-vector ``(U, U', U'', U''')`` of ``u_j^+`` at
    node ``i``; ``z_minus[j-1, i]`` the adjoint 4-vector of ``z_j^-``.  The
    reflected families ``u_j^-(x) = J u_j^+(-x)`` (so ``u_1^- ~ e^{-mu_1 x} v_4``
    as ``x -> -inf``) and ``z_j^+(x) = -z_j^-(-x) J`` are derived on demand.
    """

    params: SpectralParameters
    grid: Grid1D
    x0: float
    u_plus: np.ndarray
    z_minus: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def u_minus(self) -> np.ndarray:
        return self.u_plus[:, ::-1, :] * J_REFLECT

    @property
    def z_plus(self) -> np.ndarray:
        return -(self.z_minus[:, ::-1, :] * J_REFLECT)

    def U(self, j: int, side: str = "+", deriv: int = 0) -> np.ndarray:
        arr = self.u_plus if side == "+" else self.u_minus
        return arr[j - 1, :, deriv]

    def Z(self, j: int, side: str = "-", deriv: int = 0) -> np.ndarray:
        arr = self.z_minus if side == "-" else self.z_plus
        return z_derivatives(arr[j - 1], self.params.k, self.x)[:, deriv]

    def pairing(self, i: int, j: int) -> np.ndarray:
        """``z_i^-(x) . u_j^+(x)`` on the grid."""
        return pairing(self.z_minus[i - 1], self.u_plus[j - 1])


def solve_homogeneous(
    params: SpectralParameters, grid: Grid1D, x0: float = DEFAULT_X0, rtol: float = DEFAULT_RTOL
) -> HomogeneousSolutionSet:
    """Shoot all eight normalised solutions across ``grid``.

    ``u_j^+`` is integrated from ``max(x0, L)`` down to ``-L`` and ``z_j^-``
    from ``-max(x0, L)`` up to ``L``.

    Raises
    ------
    ValidationError
        If ``x0 < 20``.
    StiffBlowup
        If a renormalised solution exceeds the magnitude guard.
    """
    if x0 < 20:
        raise ValidationError(f"shooting start x0={x0} must be >= 20")
    x = grid.nodes
    js = (1, 2, 3, 4)
    u = shoot_u_plus(params.k, params.tau, js, x, x0=x0, rtol=rtol)[:, 0]
    z = shoot_z_minus(params.k, params.tau, js, x, x0=x0, rtol=rtol)[:, 0]
    u_plus = np.ascontiguousarray(np.transpose(u, (1, 0, 2)))
    z_minus = np.ascontiguousarray(np.transpose(z, (1, 0, 2)))
    if not (np.all(np.isfinite(u_plus)) and np.all(np.isfinite(z_minus))):
        raise DegenerateSolutions("non-finite homogeneous solution values")
    return HomogeneousSolutionSet(params, grid, float(x0), u_plus, z_minus)


def growth_solution_zero(x):
    """Growing solution at ``lambda = 0``: ``4 cosh^2(x/2)``."""
    return 4.0 * np.cosh(0.5 * np.asarray(x, dtype=float)) ** 2


def closed_forms_zero(x):
    """Closed-form ``U_1^+, U_2^+, Z_1^-, Z_2^-, Z_3^-`` at ``lambda = 0``."""
    x = np.asarray(x, dtype=float)
    U1 = 1.0 / (4.0 * np.cosh(0.5 * x) ** 2)
    e = np.exp(x)
    U2 = (-1 - 6 * e + 5 * e ** 2 + 2 * e ** 3 + 6 * e ** 2 * x) / (2 * e * (1 + e) ** 2)
    Z1 = np.logaddexp(x, 0.0)
    Z2 = np.ones_like(x)
    Z3 = -x
    return {"U1": U1, "U2": U2, "Z1": Z1, "Z2": Z2, "Z3": Z3}
