"""
Semigroup kernel of the linearised operator
===========================================

``K(x, y, k, t)`` of ``e^{-t D_k H_k}`` from the Dunford-Cauchy integral

    K = (1 / 2 pi i) oint e^{-zeta t} R(x, y; zeta) dzeta

taken counter-clockwise around the spectrum.  Three contour regimes are used:

``small_k`` (``k <= t^{-1/2}``)
    a horizontal line ``Im tau = h`` in the ``tau`` plane, above the pole;
``medium_k`` (``t^{-1/2} < k <= k0``)
    the line ``Im tau = k/2`` below the pole, plus the residue at the pole;
``large_k``
    a wedge in the ``zeta`` plane with apex ``k^4 / 2`` and half-angle
    ``pi/6``.

Both ``tau`` lines are traversed left to right, which runs clockwise around
the spectrum, hence the minus sign in front of the line integrals.  The
quadrature rule is fixed adaptively on a coarse probe sub-grid and then
applied on the full node set as a weighted sum of resolvent factors, so the
memory cost stays at one ``N x N`` matrix.  ``S = (d_y^2 - k^2) K`` is
integrated alongside ``K`` from the exact ``y``-derivatives of the factors.

For ``t < 1`` the contour is not used and the kernel comes from the matrix
exponential of the finite-difference operator on the same nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg, sparse
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import splu

from .errors import ValidationError
from .homogeneous import tau_of, zeta_of
from .numerics import ContourPath, Grid1D, LineSegment, adaptive_contour, gamma_tail, mills_product
from .profiles import du0
from .resolvent import kernel_factors, locate_pole
from .spectrum import assemble

K0_DEFAULT = 0.25
TRUNCATION = 1e-12
SMALL_K_HEIGHT_CAP = 0.29  # the tau branch points sit at +-i/2
POLE_CLEARANCE = 1.2  # small_k line must pass this factor above Im p
WEDGE_ANGLE = np.pi / 3
RESIDUE_RADIUS = 0.25  # in units of k
RESIDUE_POINTS = 32
DEFAULT_L = 20.0
DEFAULT_DX = 0.1
DEFAULT_TOL = 1e-8
PROBE_POINTS = 41
INITIAL_PANELS = 8
CHUNK = 256


def _a(k):
    return (1 + 2 * k * k) ** 2


def regime_of(k: float, t: float, k0: float = K0_DEFAULT) -> str:
    """Regime tag for ``(k, t)``; ``k > k0`` is large whatever ``t``."""
    if k > k0:
        return "large_k"
    return "small_k" if k <= t ** -0.5 else "medium_k"


def _line(k, t, h):
    """``tau``-line at height ``h``, cut where ``e^{-Re zeta t} < TRUNCATION``."""
    budget = max(np.log(1 / TRUNCATION) / t - k * k - k ** 4, 0.0)
    s = np.sqrt(h * h + budget / _a(k))
    return LineSegment(complex(-s, h), complex(s, h)), s


def contour_for(k: float, t: float, k0: float = K0_DEFAULT, regime: str | None = None) -> ContourPath:
    """Regime-tagged integration path for ``(k, t)``.

    ``regime`` overrides the classification (used to compare the small- and
    medium-k constructions at the crossover).  The small-k height
    ``2/sqrt(t)`` is capped below the branch point; when the capped line
    would not clear the pole the medium-k construction is used instead.

    Raises
    ------
    ValidationError
        For ``k < 0``, ``t <= 0``, an unknown regime, or ``t < 1`` outside
        the large-k regime.
    """
    if k < 0 or t <= 0:
        raise ValidationError(f"need k >= 0 and t > 0, got k={k}, t={t}")
    reg = regime or regime_of(k, t, k0)
    if reg not in ("small_k", "medium_k", "large_k"):
        raise ValidationError(f"unknown regime {reg!r}")
    if reg != "large_k" and t < 1:
        raise ValidationError("the tau-line contours need t >= 1")
    if reg == "small_k":
        h = min(2 / np.sqrt(t), SMALL_K_HEIGHT_CAP)
        # |p - i k| <= k^2 / 2 bounds the pole height without locating it
        if h < POLE_CLEARANCE * (k + 0.5 * k * k):
            reg = "medium_k"
        else:
            seg, s = _line(k, t, h)
            return ContourPath((seg,), "tau", regime=reg, meta={"height": h, "sigma_max": s})
    if reg == "medium_k":
        p = _pole(float(k))
        seg, s = _line(k, t, k / 2)
        meta = {"height": k / 2, "sigma_max": s, "residue_radius": RESIDUE_RADIUS * k}
        return ContourPath((seg,), "tau", regime=reg, residue_at=p, meta=meta)
    apex = 0.5 * k ** 4
    r = np.log(1 / TRUNCATION) / (t * np.cos(WEDGE_ANGLE / 2))
    ray = r * np.exp(0.5j * WEDGE_ANGLE)
    path = ContourPath.polyline([apex + np.conj(ray), apex, apex + ray], "zeta")
    return ContourPath(path.segments, "zeta", regime=reg, meta={"apex": apex, "ray_length": r})


@lru_cache(maxsize=64)
def _pole(k):
    return locate_pole(k).p


def _path_weights(k, t, z, plane):
    """``tau`` at the points ``z`` and the factor multiplying ``R`` in the integrand."""
    if plane == "tau":
        tau = z
        jac = 2 * _a(k) * tau
    else:
        tau = tau_of(k, z)
        jac = 1.0
    return tau, -np.exp(-zeta_of(k, tau) * t) * jac / (2j * np.pi)


def _residue_rule(k, t, p):
    """Trapezoid rule on ``|tau - p| = k/4`` (counter-clockwise)."""
    n = RESIDUE_POINTS
    th = 2 * np.pi * np.arange(n) / n
    e = RESIDUE_RADIUS * k * np.exp(1j * th)
    tau = p + e
    c = np.exp(-zeta_of(k, tau) * t) * 2 * _a(k) * tau * 1j * e * (2 * np.pi / n) / (2j * np.pi)
    return tau, c


def _probe_nodes(nodes, npts=PROBE_POINTS):
    c = nodes.size // 2
    stride = max(1, c // (npts // 2))
    return nodes[c % stride::stride]


def _weighted_kernels(k, tau, c, nodes):
    K = np.zeros((nodes.size, nodes.size), dtype=complex)
    S = np.zeros_like(K)
    for i in range(0, tau.size, CHUNK):
        fk, fs = kernel_factors(k, tau[i:i + CHUNK], nodes, y_deriv=(0, 2))
        K += fk.weighted_sum(c[i:i + CHUNK])
        S += fs.weighted_sum(c[i:i + CHUNK])
    return K, S - k * k * K


# ---------------------------------------------------------------------------
# Explicit pieces
# ---------------------------------------------------------------------------


def U1(x):
    """``U_1^+`` at ``lambda = 0``: ``1 / (4 cosh^2(x/2)) = du0 / 2``."""
    return 0.5 * du0(x)


def Z1(y):
    """``Z_1^+`` at ``lambda = 0`` for ``y >= 0``: ``log(1 + e^{-y})``."""
    return np.log1p(np.exp(-np.asarray(y, dtype=float)))


@dataclass(frozen=True)
class ExplicitPieces:
    """Closed-form parts of the small-k kernel at fixed ``(k, t)``.

    All evaluators broadcast over ``(x, y)``.  ``t1 = (1 + 2k^2)^2 t`` is the
    effective diffusion time.
    """

    k: float
    t: float

    @property
    def t1(self) -> float:
        return _a(self.k) * self.t

    def _erfc_form(self, y, sign):
        k, t1 = self.k, self.t1
        s, q = k * np.sqrt(t1), np.abs(y) / (2 * np.sqrt(t1))
        growth = np.exp((3 * k ** 4 + 4 * k ** 6) * self.t)
        if sign > 0:  # all of the small-k kernel
            head = mills_product(s, q) + mills_product(-s, q)
            coef = 4 * k * gamma_tail(s) - 2 * k - 2 * np.exp(-k * k * t1) / np.sqrt(np.pi * t1)
        else:  # the rest term beside the pole
            head = mills_product(s, q) - mills_product(s, -q)
            coef = 4 * k * gamma_tail(s) - 2 * np.exp(-k * k * t1) / np.sqrt(np.pi * t1)
        return growth * (head + coef * Z1(np.abs(y)))

    def Z_all(self, y):
        """``y``-profile of the leading small-k kernel ``U_1^+(x) Z(y)``."""
        return self._erfc_form(y, +1)

    def Z_pole_rest(self, y):
        """``y``-profile of ``Kpole0 + Krest00`` (medium-k leading part)."""
        return self.Z_pole(y) + self._erfc_form(y, -1)

    def Z_pole(self, y):
        k, y = self.k, np.abs(y)
        return np.exp(-k ** 3 * self.t / 3) * (np.exp(-k * y) - 2 * k * Z1(y))

    def kpole0(self, x, y):
        return U1(x) * self.Z_pole(y)

    def krest00(self, x, y):
        return U1(x) * self._erfc_form(y, -1)

    def kall00(self, x, y):
        return U1(x) * self.Z_all(y)

    def krest10(self, x, y):
        """Image-heat term; zero when ``x y <= 0``."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        k, t1 = self.k, self.t1
        g = np.exp(-(k * k + k ** 4) * self.t) / np.sqrt(4 * np.pi * t1)
        val = g * (np.exp(-(x - y) ** 2 / (4 * t1)) - np.exp(-(x + y) ** 2 / (4 * t1)))
        return np.where(x * y > 0, val, 0.0)

    def krest11(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        k, t1 = self.k, self.t1
        g = np.exp(-(k * k + k ** 4) * self.t - x * x / (4 * t1)) / (np.sqrt(4 * np.pi) * t1 ** 1.5)
        return np.sign(x - y) * x * g * Z1(np.abs(y))

    def leading(self, x, y):
        """``Kpole0 + Krest00 + Krest10 + Krest11``."""
        return self.kpole0(x, y) + self.krest00(x, y) + self.krest10(x, y) + self.krest11(x, y)


def explicit_pieces(k: float, t: float, k0: float = K0_DEFAULT) -> ExplicitPieces:
    """Closed-form kernel pieces; requires ``k <= k0`` and ``t >= 1``."""
    if not (0 <= k <= k0) or t < 1:
        raise ValidationError(f"explicit pieces need 0 <= k <= {k0} and t >= 1")
    return ExplicitPieces(float(k), float(t))


# ---------------------------------------------------------------------------
# Kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemigroupKernel:
    """``K`` and ``S = (d_y^2 - k^2) K`` sampled on symmetric ``nodes``.

    ``K0 = U_1^+(x) Z(y)`` is the explicit leading part (the ``Kall00`` form
    for small k, ``Kpole0 + Krest00`` for medium k, zero for large k) and
    ``K1 = K - K0``.  ``imag_residual`` is the largest discarded imaginary
    part.
    """

    k: float
    t: float
    regime: str
    method: str
    nodes: np.ndarray
    K: np.ndarray
    S: np.ndarray
    K0: np.ndarray
    imag_residual: float = 0.0
    quad_error: float = 0.0
    path: ContourPath | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def K1(self) -> np.ndarray:
        return self.K - self.K0

    @property
    def weights(self) -> np.ndarray:
        return Grid1D(float(self.nodes[-1]), self.nodes.size).trapezoid_weights

    def __call__(self, x, y):
        """Bicubic interpolant of ``K`` at arbitrary points in ``[-L, L]^2``."""
        spl = RectBivariateSpline(self.nodes, self.nodes, self.K)
        return spl(x, y, grid=False)

    def apply(self, payload) -> np.ndarray:
        """``int K(x, y) f(y) dy`` at the nodes; ``payload`` is callable or sampled."""
        return self.K @ (self.weights * _sample(payload, self.nodes))


def _sample(payload, nodes):
    f = payload(nodes) if callable(payload) else np.asarray(payload)
    if f.shape != nodes.shape:
        raise ValidationError("payload must be sampled on the kernel nodes")
    return f


def default_nodes(L: float = DEFAULT_L, dx: float = DEFAULT_DX) -> np.ndarray:
    return Grid1D.with_spacing(L, dx).nodes


def _fd_kernel(k, t, nodes):
    """Kernels from the dense matrix exponential of the discrete ``D H``."""
    grid = Grid1D(float(nodes[-1]), nodes.size)
    pair = assemble(k, grid)
    E = linalg.expm(-t * (pair.D @ pair.H).toarray())
    return E / grid.dx, -(E @ pair.D.toarray()) / grid.dx


def kernel(
    k: float,
    t: float,
    tol: float = DEFAULT_TOL,
    nodes: np.ndarray | None = None,
    k0: float = K0_DEFAULT,
    regime: str | None = None,
) -> SemigroupKernel:
    """Semigroup kernel on ``nodes`` (default ``[-20, 20]`` with spacing 0.1).

    Raises
    ------
    NonConvergence
        Propagated from the contour quadrature.
    ValidationError
        For ``k < 0``, ``t <= 0`` or non-symmetric nodes.
    """
    if k < 0 or t <= 0:
        raise ValidationError(f"need k >= 0 and t > 0, got k={k}, t={t}")
    x = default_nodes() if nodes is None else np.asarray(nodes, dtype=float)
    if not np.allclose(x, -x[::-1], atol=1e-12):
        raise ValidationError("kernel nodes must be symmetric about 0")
    reg = regime or regime_of(k, t, k0)
    K0 = _leading(k, t, reg, x, k0)
    if t < 1:
        K, S = _fd_kernel(k, t, x)
        return SemigroupKernel(float(k), float(t), reg, "timestepper", x, K, S, K0)

    path = contour_for(k, t, k0, regime)
    probe = _probe_nodes(x)

    def integrand(z):
        tau, c = _path_weights(k, t, z, path.plane)
        return kernel_factors(k, tau, probe).matrix() * c[:, None, None]

    q = adaptive_contour(path, integrand, tol=tol, initial_panels=INITIAL_PANELS)
    tau, c = _path_weights(k, t, q.nodes, path.plane)
    c = c * q.weights
    if path.residue_at is not None:
        rt, rc = _residue_rule(k, t, path.residue_at)
        tau, c = np.concatenate([tau, rt]), np.concatenate([c, rc])
    K, S = _weighted_kernels(k, tau, c, x)
    imag = float(max(np.max(np.abs(K.imag)), np.max(np.abs(S.imag))))
    meta = {"quadrature_points": int(q.nodes.size), "panels": q.npanels}
    return SemigroupKernel(
        float(k), float(t), path.regime, "contour", x, K.real, S.real, K0,
        imag, float(q.error), path, meta,
    )


def _leading(k, t, reg, x, k0):
    if reg == "large_k" or k > k0 or t < 1:
        return np.zeros((x.size, x.size))
    e = ExplicitPieces(float(k), float(t))
    Z = e.Z_all(x) if reg == "small_k" else e.Z_pole_rest(x)
    return np.outer(U1(x), Z)


def apply_S(kern: SemigroupKernel, payload):
    """``x -> int S(x, y) f(y) dy`` as a callable interpolant over the nodes."""
    from scipy.interpolate import CubicSpline

    vals = kern.S @ (kern.weights * _sample(payload, kern.nodes))
    return CubicSpline(kern.nodes, vals)


# ---------------------------------------------------------------------------
# Time-stepping oracle
# ---------------------------------------------------------------------------


def evolve(k: float, t: float, w0: np.ndarray, grid: Grid1D, dt: float = 0.01) -> np.ndarray:
    """``w' = -D H w`` to time ``t`` by two-stage L-stable SDIRK.

    The step is Richardson-extrapolated from ``dt`` and ``dt/2`` (second
    order scheme, so the combination ``(4 w_{dt/2} - w_dt) / 3``).
    """
    pair = assemble(k, grid)
    A = (pair.D @ pair.H).tocsc()
    g = 1 - 1 / np.sqrt(2)

    def run(h):
        n = max(1, int(np.ceil(t / h - 1e-9)))
        h = t / n
        lu = splu((sparse.identity(grid.N, format="csc") + g * h * A).tocsc())
        w = np.array(w0, dtype=float)
        for _ in range(n):
            y1 = lu.solve(w)
            w = lu.solve(w - (1 - g) * h * (A @ y1))
        return w

    return (4 * run(dt / 2) - run(dt)) / 3


def validate_vs_timestepping(k: float, t: float, initial, kern: SemigroupKernel | None = None,
                             margin: float = 30.0, dt: float = 0.01) -> float:
    """Relative L2 distance between kernel application and time stepping.

    The time stepper runs on the kernel's spacing over a grid extended by
    ``margin`` so its Dirichlet walls stay out of reach; both results are
    compared on the kernel nodes.

    Raises
    ------
    ValidationError
        If ``t > 50``.
    """
    if t > 50:
        raise ValidationError("time-stepping oracle limited to t <= 50")
    kern = kern or kernel(k, t)
    x = kern.nodes
    dx = x[1] - x[0]
    n_ext = int(round(margin / dx))
    big = Grid1D(float(x[-1]) + n_ext * dx, x.size + 2 * n_ext)
    w0 = _sample(initial, big.nodes) if callable(initial) else np.pad(initial, n_ext)
    w0 = np.where(np.abs(big.nodes) <= x[-1] + 1e-9, w0, 0.0)
    ref = evolve(k, t, w0, big, dt)[n_ext:n_ext + x.size]
    got = kern.apply(w0[n_ext:n_ext + x.size])
    return float(np.linalg.norm(got - ref) / np.linalg.norm(ref))
