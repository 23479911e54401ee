"""
Shared numerical primitives
===========================

Gaussian tail functions, adaptive Gauss-Kronrod quadrature along piecewise
smooth complex contours, and the uniform 1D grid used by every solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import NonConvergence, ValidationError

# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------


def gamma_tail(z):
    """Gaussian tail ``(1/sqrt(pi)) * int_z^inf exp(-r^2) dr`` = erfc(z)/2.

    Accepts real or complex scalars/arrays.  The complex error function is
    evaluated through the Faddeeva routines in scipy, which stay accurate
    and overflow-free in the asymptotic regime.
    """
    z = np.asarray(z)
    out = 0.5 * special.erfc(z)
    return out[()] if out.ndim == 0 else out


def mills_product(x, y):
    """``exp(2xy) * gamma_tail(x + y)`` without overflow or cancellation.

    Written as ``exp(-x^2 - y^2) * [exp(s^2) gamma_tail(s)]`` with
    ``s = x + y``; the bracket is the scaled complementary error function.
    For ``Re s < 0`` the reflection ``gamma_tail(s) = 1 - gamma_tail(-s)``
    keeps the scaled factor bounded.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    s = x + y
    damp = np.exp(-x * x - y * y)
    with np.errstate(over="ignore", invalid="ignore"):
        pos = damp * 0.5 * special.erfcx(s)
        neg = np.exp(2.0 * x * y) - damp * 0.5 * special.erfcx(-s)
    out = np.where(np.real(s) >= 0, pos, neg)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Uniform node grid on [-L, L] with N points (both endpoints included)."""

    L: float
    N: int

    def __post_init__(self):
        if self.N < 4:
            raise ValidationError(f"Grid1D needs N >= 4, got {self.N}")
        if not self.L > 0:
            raise ValidationError(f"Grid1D needs L > 0, got {self.L}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.N - 1)

    @property
    def nodes(self) -> np.ndarray:
        x = np.linspace(-self.L, self.L, self.N)
        # exact antisymmetry so that reflection maps nodes onto nodes
        return 0.5 * (x - x[::-1])

    @property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.N, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    @classmethod
    def with_spacing(cls, L: float, dx: float) -> "Grid1D":
        n = int(round(2.0 * L / dx)) + 1
        return cls(float(L), n)


# ---------------------------------------------------------------------------
# Contours
# ---------------------------------------------------------------------------


class Segment:
    """A smooth parameterised curve s in [0, 1] -> complex plane."""

    def point(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def deriv(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reversed(self) -> "Segment":
        return _Reversed(self)

    @property
    def start(self) -> complex:
        return complex(self.point(np.array([0.0]))[0])

    @property
    def end(self) -> complex:
        return complex(self.point(np.array([1.0]))[0])


@dataclass(frozen=True)
class LineSegment(Segment):
    a: complex
    b: complex

    def point(self, s):
        s = np.asarray(s, dtype=float)
        return self.a + (self.b - self.a) * s

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        return np.full(s.shape, self.b - self.a, dtype=complex)


@dataclass(frozen=True)
class ArcSegment(Segment):
    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * np.asarray(s, dtype=float)
        return self.center + self.radius * np.exp(1j * th)

    def deriv(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * np.asarray(s, dtype=float)
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)


@dataclass(frozen=True)
class _Reversed(Segment):
    inner: Segment

    def point(self, s):
        return self.inner.point(1.0 - np.asarray(s, dtype=float))

    def deriv(self, s):
        return -self.inner.deriv(1.0 - np.asarray(s, dtype=float))

    def reversed(self):
        return self.inner


@dataclass(frozen=True)
class ContourPath:
    """Ordered chain of segments in the zeta- or tau-plane.

    ``residue_at`` is a bookkeeping marker used by the semigroup module: a
    tau-location whose residue must be added to the path integral.
    """

    segments: tuple
    plane: str = "zeta"
    closed: bool = False
    regime: str | None = None
    residue_at: complex | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.plane not in ("zeta", "tau"):
            raise ValidationError(f"unknown plane tag {self.plane!r}")
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        for s0, s1 in zip(segs, segs[1:]):
            if abs(s0.end - s1.start) > 1e-12 * (1 + abs(s0.end)):
                raise ValidationError("consecutive contour segments do not share endpoints")
        if self.closed and segs and abs(segs[-1].end - segs[0].start) > 1e-12 * (1 + abs(segs[0].start)):
            raise ValidationError("closed contour does not return to its start")

    def reversed(self) -> "ContourPath":
        return ContourPath(
            tuple(s.reversed() for s in reversed(self.segments)),
            self.plane,
            self.closed,
            self.regime,
            self.residue_at,
            dict(self.meta),
        )

    def __add__(self, other: "ContourPath") -> "ContourPath":
        if other.plane != self.plane:
            raise ValidationError("cannot concatenate contours from different planes")
        return ContourPath(self.segments + other.segments, self.plane)

    @classmethod
    def circle(cls, center: complex, radius: float, plane: str = "zeta") -> "ContourPath":
        return cls((ArcSegment(center, radius, 0.0, 2 * np.pi),), plane, closed=True)

    @classmethod
    def polyline(cls, points: Sequence[complex], plane: str = "zeta") -> "ContourPath":
        segs = tuple(LineSegment(complex(a), complex(b)) for a, b in zip(points, points[1:]))
        return cls(segs, plane)


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod (7, 15)
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# nodes on [-1, 1] in increasing order, with matching Kronrod/Gauss weights
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
GK_GAUSS = np.zeros(15)
GK_GAUSS[1:15:2] = np.concatenate([_WG[:-1], _WG[::-1]])

DEFAULT_MAX_PANELS = 2 ** 14


@dataclass
class QuadratureResult:
    """Outcome of an adaptive contour quadrature.

    ``nodes`` and ``weights`` form the final Kronrod rule (weights already
    include the path Jacobian dz/ds), so ``sum(weights * f(nodes))`` equals
    ``value`` for the integrand that drove the refinement.
    """

    value: np.ndarray | complex
    error: float
    nodes: np.ndarray
    weights: np.ndarray
    npanels: int


def _panel_rule(seg: Segment, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    s = mid[:, None] + half[:, None] * GK_NODES[None, :]
    z = seg.point(s)
    dz = seg.deriv(s) * half[:, None]
    return z, dz


def adaptive_contour(
    path: ContourPath,
    integrand: Callable[[np.ndarray], np.ndarray],
    tol: float = 1e-10,
    max_panels: int = DEFAULT_MAX_PANELS,
    initial_panels: int = 1,
) -> QuadratureResult:
    """Globally adaptive G7/K15 quadrature over every segment of ``path``.

    ``integrand`` receives a 1-D complex array of points and returns an array
    whose leading axis matches it (trailing axes are allowed, e.g. a kernel
    sampled on a grid).  Panels are refined by bisection in rounds; within a
    round all new panels are evaluated in a single batched call.  Stops when
    the summed Kronrod-Gauss discrepancy is at most ``tol * (1 + |I|)`` with
    ``|I|`` the max-norm of the running result.
    """
    if not (1e-14 <= tol < 1e-2):
        raise ValidationError(f"tolerance {tol} outside supported range")

    # panel list: (segment index, a, b, kronrod value, gauss value, error)
    seg_ids: list[int] = []
    aa: list[float] = []
    bb: list[float] = []
    for i, _ in enumerate(path.segments):
        edges = np.linspace(0.0, 1.0, initial_panels + 1)
        seg_ids += [i] * initial_panels
        aa += list(edges[:-1])
        bb += list(edges[1:])

    kvals: list = [None] * len(aa)
    gvals: list = [None] * len(aa)
    errs = np.zeros(len(aa))
    pending = list(range(len(aa)))
    counts = np.zeros(len(path.segments), dtype=int)
    for i in seg_ids:
        counts[i] += 1

    while True:
        if pending:
            zs, dzs = [], []
            for seg_i in sorted(set(seg_ids[p] for p in pending)):
                idx = [p for p in pending if seg_ids[p] == seg_i]
                z, dz = _panel_rule(path.segments[seg_i], np.array([aa[p] for p in idx]), np.array([bb[p] for p in idx]))
                zs.append((idx, z, dz))
            allz = np.concatenate([z.ravel() for _, z, _ in zs])
            vals = np.asarray(integrand(allz))
            if vals.shape[0] != allz.size:
                raise ValidationError("integrand must return one value per point along axis 0")
            if not np.all(np.isfinite(vals)):
                raise NonConvergence("integrand not finite on the contour (pole on or near the path?)")
            off = 0
            for idx, z, dz in zs:
                n = z.size
                v = vals[off:off + n].reshape(z.shape + vals.shape[1:])
                off += n
                tail = (1,) * (vals.ndim - 1)
                dzr = dz.reshape(dz.shape + tail)
                kv = np.sum(v * dzr * GK_KRONROD.reshape((1, 15) + tail), axis=1)
                gv = np.sum(v * dzr * GK_GAUSS.reshape((1, 15) + tail), axis=1)
                for j, p in enumerate(idx):
                    kvals[p] = kv[j]
                    gvals[p] = gv[j]
                    errs[p] = float(np.max(np.abs(kv[j] - gv[j])))
            pending = []

        total = sum(kvals)
        scale = 1.0 + float(np.max(np.abs(total)))
        target = tol * scale
        err = float(errs.sum())
        if err <= target:
            break

        # split the panels carrying more than their share of the budget
        npan = len(aa)
        share = target / npan
        to_split = [p for p in range(npan) if errs[p] > share]
        if not to_split:
            to_split = [int(np.argmax(errs))]
        for p in to_split:
            s = seg_ids[p]
            counts[s] += 1
            if counts[s] > max_panels:
                raise NonConvergence(
                    f"quadrature exceeded {max_panels} panels on segment {s}; "
                    "a singularity probably lies on or near the path"
                )
            mid = 0.5 * (aa[p] + bb[p])
            seg_ids.append(s)
            aa.append(mid)
            bb.append(bb[p])
            bb[p] = mid
            kvals.append(None)
            gvals.append(None)
            pending += [p, len(aa) - 1]
        errs = np.concatenate([errs, np.zeros(len(aa) - len(errs))])

    # assemble the final rule in path order
    order = sorted(range(len(aa)), key=lambda p: (seg_ids[p], aa[p]))
    nodes, weights = [], []
    for p in order:
        z, dz = _panel_rule(path.segments[seg_ids[p]], np.array([aa[p]]), np.array([bb[p]]))
        nodes.append(z[0])
        weights.append(dz[0] * GK_KRONROD)
    return QuadratureResult(
        value=total,
        error=err,
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        npanels=len(aa),
    )


def contour_integrate(
    path: ContourPath,
    integrand: Callable[[np.ndarray], np.ndarray],
    tol: float = 1e-10,
    max_panels: int = DEFAULT_MAX_PANELS,
    vectorized: bool = True,
):
    """Integral of ``integrand`` along ``path``; see :func:`adaptive_contour`."""
    f = integrand
    if not vectorized:
        def f(z):
            return np.array([integrand(zz) for zz in z])
    res = adaptive_contour(path, f, tol=tol, max_panels=max_panels)
    v = res.value
    return complex(v) if np.ndim(v) == 0 else v
