"""
Nonlinear Cahn-Hilliard evolution around the kink in d = 3
==========================================================

Evolves ``u = u0(x) + v`` under

    v_t = Lap [ -Lap v + (1 + V) v + (3/2) u0 v^2 + (1/2) v^3 ]

on the periodic box ``[-L, L) x [-Lperp/2, Lperp/2)^2`` by a Fourier
pseudo-spectral method.  The perturbation ``v`` decays in the normal
direction ``x``, so periodicity there only matters through exponentially
small tails; ``u0`` and ``V`` enter pointwise.

Time stepping is a stabilised IMEX scheme (SBDF2 after one IMEX Euler
step).  The constant-coefficient part ``-q^2 (q^2 + S)`` is implicit and
diagonal; ``-q^2 F[(1 + V - S) v + N(v)]`` is explicit.  Any state at rest
under the full operator is preserved exactly, and the ``q = 0`` mode has
zero right-hand side, so the mass ``int v`` is conserved to rounding.

Diagnostics follow the transverse spreading: centre amplitude, transverse
half-width, mass, the two weighted norms, and the fitted exponents over a
time window.
"""

from __future__ import annotations

import csv
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import fft as sfft
from scipy import optimize, special

from .errors import BlowUp, DecayTooSlow, ValidationError
from .profiles import du0, phi_star, potential, u0

D = 3
STABILISER = 1.0
BLOWUP_LEVEL = 0.5
MAX_DT = 0.1
NORM_T_POWER = 2  # n in the time-weighted norm (any n > (d+1)/3)
OMEGA_POWER = 2  # m in omega(x) = (1 + |x|)^{-m}
FIT_WINDOW = (10.0, 100.0)
COLLAPSE_TIME = 100.0
GAUSS_WIDTH = 2.0
RECORDS = 120
CONFIG_KEYS = ("L", "N", "Lperp", "M", "dt", "T", "delta", "r", "shape", "out_dir")


@dataclass(frozen=True)
class SimulationConfig:
    """Box, resolution, time stepping and initial perturbation.

    ``shape`` is ``"algebraic"`` for ``h = delta (1 + |x|^2)^{-r/2}`` or
    ``"gauss"`` for ``h = delta exp(-|x|^2 / 4)`` (integral known in closed
    form).  ``dump_times`` lists the snapshot times written as CSV.
    """

    L: float = 40.0
    N: int = 128
    Lperp: float = 192.0
    M: int = 128
    dt: float = 0.05
    T: float = 200.0
    delta: float = 0.01
    r: float = 5.0
    shape: str = "algebraic"
    out_dir: str | None = None
    dump_times: tuple = (10.0, 100.0)

    def __post_init__(self):
        for name in ("N", "M"):
            n = getattr(self, name)
            if n < 8 or n % 2:
                raise ValidationError(f"{name} must be even and >= 8, got {n}")
        if not (0 < self.dt <= MAX_DT):
            raise ValidationError(f"dt must lie in (0, {MAX_DT}], got {self.dt}")
        if self.L <= 0 or self.Lperp <= 0 or self.T <= 0:
            raise ValidationError("L, Lperp and T must be positive")
        if self.delta < 0:
            raise ValidationError(f"delta must be nonnegative, got {self.delta}")
        if self.shape not in ("algebraic", "gauss"):
            raise ValidationError(f"unknown perturbation shape {self.shape!r}")

    def quick(self) -> "SimulationConfig":
        """Same run at half the resolution in every direction."""
        return replace(self, N=self.N // 2, M=self.M // 2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dump_times"] = list(self.dump_times)
        return d

    @classmethod
    def from_file(cls, path: str) -> "SimulationConfig":
        """Parse a flat ``key = value`` file (``#`` starts a comment).

        Raises
        ------
        ValidationError
            If the file is missing or holds an unknown key or bad value.
        """
        if not os.path.isfile(path):
            raise ValidationError(f"config file not found: {path}")
        types = {"L": float, "N": int, "Lperp": float, "M": int, "dt": float, "T": float,
                 "delta": float, "r": float, "shape": str, "out_dir": str}
        kw = {}
        with open(path) as fh:
            for n, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, val = (s.strip() for s in line.partition("="))
                if not sep or key not in CONFIG_KEYS:
                    raise ValidationError(f"{path}:{n}: expected one of {CONFIG_KEYS} as 'key = value'")
                try:
                    kw[key] = types[key](val)
                except ValueError as exc:
                    raise ValidationError(f"{path}:{n}: bad value for {key}: {val!r}") from exc
        return cls(**kw)


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Periodic sample grid and its Fourier wavenumbers."""

    config: SimulationConfig

    @property
    def dx(self) -> float:
        return 2 * self.config.L / self.config.N

    @property
    def dxh(self) -> float:
        return self.config.Lperp / self.config.M

    @property
    def x(self) -> np.ndarray:
        return -self.config.L + self.dx * np.arange(self.config.N)

    @property
    def xh(self) -> np.ndarray:
        return -0.5 * self.config.Lperp + self.dxh * np.arange(self.config.M)

    @property
    def cell(self) -> float:
        return self.dx * self.dxh ** 2

    @property
    def shape(self):
        return (self.config.N, self.config.M, self.config.M)

    def wavenumbers(self):
        xi = 2 * np.pi * sfft.fftfreq(self.config.N, self.dx)
        k1 = 2 * np.pi * sfft.fftfreq(self.config.M, self.dxh)
        k2 = 2 * np.pi * sfft.rfftfreq(self.config.M, self.dxh)
        return xi[:, None, None], k1[None, :, None], k2[None, None, :]

    def q2(self) -> np.ndarray:
        xi, k1, k2 = self.wavenumbers()
        return xi ** 2 + k1 ** 2 + k2 ** 2

    def radius2(self) -> np.ndarray:
        x, xh = self.x, self.xh
        return x[:, None, None] ** 2 + xh[None, :, None] ** 2 + xh[None, None, :] ** 2


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------


def make_perturbation(config: SimulationConfig):
    """Sampled ``h`` and its integral ``A`` (grid quadrature).

    Raises
    ------
    DecayTooSlow
        If ``r <= d + 1``.
    """
    if config.r <= D + 1:
        raise DecayTooSlow(f"decay exponent r = {config.r} must exceed d + 1 = {D + 1}")
    box = Box(config)
    rho2 = box.radius2()
    if config.shape == "algebraic":
        h = config.delta * (1 + rho2) ** (-config.r / 2)
    else:
        h = config.delta * np.exp(-rho2 / GAUSS_WIDTH ** 2)
    return h, float(np.sum(h) * box.cell)


def exact_mass(config: SimulationConfig) -> float:
    """``int h`` over R^3 for the configured shape."""
    if config.shape == "gauss":
        return config.delta * (np.pi * GAUSS_WIDTH ** 2) ** 1.5
    r = config.r
    return config.delta * np.pi ** 1.5 * special.gamma((r - D) / 2) / special.gamma(r / 2)


# ---------------------------------------------------------------------------
# State and stepping
# ---------------------------------------------------------------------------


@dataclass
class SimulationState:
    """Fourier coefficients of ``v`` (``rfftn`` layout) and stepping history."""

    box: Box
    vhat: np.ndarray
    t: float = 0.0
    prev_vhat: np.ndarray | None = None
    prev_explicit: np.ndarray | None = None
    nonlinear: bool = True

    @property
    def v(self) -> np.ndarray:
        return sfft.irfftn(self.vhat, s=self.box.shape)

    @property
    def mass(self) -> float:
        return float(self.vhat[0, 0, 0].real * self.box.cell)

    def mixed(self) -> np.ndarray:
        """``v(x, k)``: continuous transverse Fourier transform on the full lattice."""
        return sfft.fft2(self.v, axes=(1, 2)) * self.box.dxh ** 2

    @classmethod
    def initial(cls, config: SimulationConfig, v0: np.ndarray | None = None, nonlinear: bool = True):
        box = Box(config)
        v0 = make_perturbation(config)[0] if v0 is None else v0
        return cls(box, sfft.rfftn(v0), 0.0, nonlinear=nonlinear)


class Stepper:
    """Cached symbols and profiles for one configuration."""

    def __init__(self, config: SimulationConfig):
        self.config = config
        self.box = Box(config)
        self.q2 = self.box.q2()
        self.lam = self.q2 * (self.q2 + STABILISER)
        x = self.box.x[:, None, None]
        self.coef = 1.0 + potential(x) - STABILISER
        self.u0 = u0(x)

    def explicit(self, state: SimulationState):
        v = state.v
        vmax = float(np.max(np.abs(v)))
        if not np.isfinite(vmax) or vmax > BLOWUP_LEVEL:
            raise BlowUp(f"max|v| = {vmax:.3g} at t = {state.t:.4g} left the perturbative regime")
        g = self.coef * v
        if state.nonlinear:
            g = g + 1.5 * self.u0 * v * v + 0.5 * v ** 3
        return -self.q2 * sfft.rfftn(g)

    def step(self, state: SimulationState, dt: float | None = None) -> SimulationState:
        """One IMEX step (SBDF2 once history exists, IMEX Euler otherwise).

        Raises
        ------
        BlowUp
            If ``max|v| > 0.5``.
        """
        dt = self.config.dt if dt is None else dt
        E = self.explicit(state)
        if state.prev_vhat is None:
            new = (state.vhat + dt * E) / (1 + dt * self.lam)
        else:
            rhs = 4 * state.vhat - state.prev_vhat + 2 * dt * (2 * E - state.prev_explicit)
            new = rhs / (3 + 2 * dt * self.lam)
        return SimulationState(state.box, new, state.t + dt, state.vhat, E, state.nonlinear)


def step(state: SimulationState, dt: float) -> SimulationState:
    """Convenience wrapper building a :class:`Stepper` for ``state``."""
    return Stepper(state.box.config).step(state, dt)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def transverse_profile(state: SimulationState):
    """Callable ``r -> v(0, (r, 0), t)`` by exact trigonometric interpolation."""
    box = state.box
    M = box.config.M
    N = box.config.N
    # transverse coefficients at x = 0 (x index N/2 sits at x = 0)
    phase = np.exp(1j * box.wavenumbers()[0][:, 0, 0] * box.config.L)
    c = np.tensordot(phase, state.vhat, axes=(0, 0)) / N  # (M, M//2+1)
    shift = 0.5 * box.config.Lperp
    k2 = box.wavenumbers()[2][0, 0, :]
    w = np.full(c.shape[1], 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    # xh2 = 0 sits at index M/2; the Nyquist column is real there
    line = (c * w * np.exp(1j * k2 * shift)).sum(axis=1) / M
    k1 = box.wavenumbers()[1][0, :, 0]
    nyq = M // 2

    def f(r):
        r = np.asarray(r, dtype=float)
        ph = np.exp(1j * np.multiply.outer(r + shift, k1))
        ph[..., nyq] = np.cos((r + shift) * k1[nyq])
        return np.real(ph @ line) / M

    return f


def half_width(profile, r_max: float) -> float:
    """First radius where the profile falls to half its centre value."""
    c = profile(0.0)
    rs = np.linspace(0.0, r_max, 400)
    vals = profile(rs) - 0.5 * c
    idx = np.nonzero(np.sign(vals) != np.sign(vals[0]))[0]
    if c == 0 or idx.size == 0:
        return float("nan")
    i = idx[0]
    return float(optimize.brentq(lambda r: profile(r) - 0.5 * c, rs[i - 1], rs[i], xtol=1e-12))


def weighted_norms(state: SimulationState, r: float | None = None):
    """``(||v||_X, ||v||_t)`` as discrete sups over the samples.

    ``||v||_X`` uses the weight ``(1 + |x|^2)^{r/2}``, equivalent to
    ``(1 + |x|)^r`` and equal to the inverse of the default profile, so the
    initial perturbation has norm exactly ``delta``.  ``||v||_t`` weights the
    mixed representation by ``(1 + k^3 t)^n / (omega(x) + k_t omega(k_t x))``
    with ``k_t = min(k, 1) + t^{-1/2}``; ``t`` is floored at 1.
    """
    box = state.box
    r = box.config.r if r is None else r
    v = state.v
    nX = float(np.max(np.abs(v) * (1 + box.radius2()) ** (r / 2)))
    t = max(state.t, 1.0)
    k1 = 2 * np.pi * sfft.fftfreq(box.config.M, box.dxh)
    k = np.hypot(k1[:, None], k1[None, :])[None]
    kt = np.minimum(k, 1.0) + t ** -0.5
    x = np.abs(box.x)[:, None, None]
    omega = lambda s: (1 + s) ** (-OMEGA_POWER)
    weight = (1 + k ** 3 * t) ** NORM_T_POWER / (omega(x) + kt * omega(kt * x))
    nt = float(np.max(np.abs(state.mixed()) * weight))
    return nX, nt


def front_displacement(state: SimulationState, window: float = 10.0, iters: int = 4) -> np.ndarray:
    """``a(xh)`` from least squares of ``u0(x) + v`` against ``u0(x - a)`` on ``|x| <= window``.

    Gauss-Newton from ``a = 0``; entries where it fails to settle are NaN.
    """
    box = state.box
    x = box.x
    m = np.abs(x) <= window
    xs = x[m][:, None, None]
    u = u0(xs) + state.v[m]
    a = np.zeros(u.shape[1:])
    for _ in range(iters):
        res = u - u0(xs - a)
        J = -du0(xs - a)  # d u0(x - a)/da = -du0
        a = a + np.sum(J * res, axis=0) / np.sum(J * J, axis=0)
    res = u - u0(xs - a)
    ok = np.max(np.abs(res), axis=0) < 10 * np.max(np.abs(state.v[m]), axis=0) + 1e-12
    return np.where(ok, a, np.nan)


@dataclass
class DiagnosticsRecord:
    t: float
    center_amp: float
    half_width: float
    mass: float
    norm_X: float
    norm_t: float
    A_est: float

    HEADER = ("t", "center_amp", "half_width", "mass", "norm_X", "norm_t", "A_est")

    def row(self):
        return [repr(float(getattr(self, h))) for h in self.HEADER]


def record(state: SimulationState) -> DiagnosticsRecord:
    box = state.box
    prof = transverse_profile(state)
    nX, nt = weighted_norms(state)
    mass = state.mass
    return DiagnosticsRecord(
        state.t, float(prof(0.0)), half_width(prof, 0.25 * box.config.Lperp),
        mass, nX, nt, mass,
    )


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


@dataclass
class SimulationResult:
    config: SimulationConfig
    records: list
    A: float
    A_exact: float
    fits: dict = field(default_factory=dict)
    collapse: float = float("nan")
    mass_drift_rate: float = 0.0
    outputs: list = field(default_factory=list)


def log_slope(t, y) -> float:
    return float(np.polyfit(np.log(t), np.log(np.abs(y)), 1)[0])


def collapse_mismatch(state: SimulationState, A: float) -> float:
    """L-infinity distance of the rescaled centre profile from ``phi*``, relative to ``phi*(0)``.

    The profile is ``v(0, xh, t) t^{2/3} / ((A/2) du0(0))`` against
    ``phi*(|xh| t^{-1/3})`` on ``|xh| <= Lperp/4``.
    """
    t = state.t
    prof = transverse_profile(state)
    r = np.linspace(0.0, 0.25 * state.box.config.Lperp, 400)
    scaled = prof(r) * t ** (2 / 3) / (0.5 * A * du0(0.0))
    ref = phi_star(r * t ** (-1 / 3), D - 1)
    return float(np.max(np.abs(scaled - ref)) / phi_star(0.0, D - 1))


def dump_field(state: SimulationState, path: str):
    """Write ``u = u0 + v`` on the ``xh2 = 0`` plane as ``x,xhat1,xhat2,u``."""
    box = state.box
    j0 = box.config.M // 2
    u = u0(box.x)[:, None] + state.v[:, :, j0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "xhat1", "xhat2", "u"])
        for i, x in enumerate(box.x):
            for j, xh in enumerate(box.xh):
                w.writerow([repr(float(x)), repr(float(xh)), "0.0", repr(float(u[i, j]))])


def run_and_measure(config: SimulationConfig, window=FIT_WINDOW, progress=None) -> SimulationResult:
    """Evolve to ``T`` with log-spaced diagnostics and fit the scaling exponents.

    Raises
    ------
    BlowUp
        Propagated from the stepper.
    DecayTooSlow
        From :func:`make_perturbation`.
    """
    h, A = make_perturbation(config)
    stepper = Stepper(config)
    state = SimulationState.initial(config, h)
    nsteps = int(round(config.T / config.dt))
    marks = set(np.unique(np.round(np.geomspace(1, nsteps, RECORDS)).astype(int)).tolist())
    marks.add(0)
    dumps = {int(round(t / config.dt)): t for t in config.dump_times if t <= config.T}
    coll_step = int(round(COLLAPSE_TIME / config.dt))
    records, outputs = [], []
    collapse = float("nan")
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
    for n in range(nsteps + 1):
        if n in marks:
            records.append(record(state))
            if progress:
                progress(records[-1])
        if n == coll_step:
            collapse = collapse_mismatch(state, A)
        if config.out_dir and n in dumps:
            path = os.path.join(config.out_dir, f"field_t{dumps[n]:g}.csv")
            dump_field(state, path)
            outputs.append(path)
        if n < nsteps:
            state = stepper.step(state)
    res = SimulationResult(config, records, A, exact_mass(config), collapse=collapse, outputs=outputs)
    t = np.array([r.t for r in records])
    sel = (t >= window[0]) & (t <= window[1])
    if np.count_nonzero(sel) >= 2:
        res.fits["amplitude_exponent"] = log_slope(t[sel], [records[i].center_amp for i in np.nonzero(sel)[0]])
        res.fits["half_width_exponent"] = log_slope(t[sel], [records[i].half_width for i in np.nonzero(sel)[0]])
    m = np.array([r.mass for r in records])
    scale = max(abs(m[0]), 1e-300)
    res.mass_drift_rate = float(np.max(np.abs(m - m[0])) / scale / max(t[-1], 1e-300))
    if config.out_dir:
        path = os.path.join(config.out_dir, "diagnostics.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(DiagnosticsRecord.HEADER)
            for rec in records:
                w.writerow(rec.row())
        outputs.append(path)
    return res
