"""
Acceptance suite
================

Nine numbered checks covering the eigenvalue law, the closed forms at
``lambda = 0``, the Evans-type determinant, the pole, the semigroup kernel
and the nonlinear scaling run.  Each returns a :class:`CriterionResult`
with the measured quantities, the pass/fail verdict (accuracy and runtime
budget) and the wall time.

Run as ``python3 -m kinklab.acceptance [--quick]`` or ``kinklab verify-all``.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .homogeneous import closed_forms_zero, solve_homogeneous, spectral_parameters
from .numerics import Grid1D
from .profiles import du0
from .resolvent import det_omega, det_omega_series, locate_pole, omega
from .semigroup import U1, explicit_pieces, kernel, validate_vs_timestepping
from .simulator import SimulationConfig, run_and_measure
from .spectrum import assemble, default_grid, lowest_eigenpair

K_VALUES = (0.025, 0.05, 0.1)
REMAINDER_C = 1.0  # frozen regression constant of the small-k remainder envelope


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    budget: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"criterion {self.number} [{verdict}] {self.name} ({self.seconds:.1f}s / {self.budget:.0f}s): {info}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(number, name, budget, fn):
    t0 = time.perf_counter()
    ok, details = fn()
    dt = time.perf_counter() - t0
    return CriterionResult(number, name, bool(ok) and dt <= budget, dt, budget, details)


# ---------------------------------------------------------------------------
# Criteria 1-2: spectrum
# ---------------------------------------------------------------------------


def _spectrum_reports():
    return [lowest_eigenpair(assemble(k, default_grid(k))) for k in K_VALUES]


def criteria_spectrum():
    """Eigenvalue law (1) and spectral gap (2), sharing one eigensolve per ``k``."""
    t0 = time.perf_counter()
    reps = _spectrum_reports()
    dt = time.perf_counter() - t0
    gaps = [abs(r.zeta0 / r.k ** 3 - 1 / 3) for r in reps]
    ok1 = all(g <= 0.5 * r.k for g, r in zip(gaps, reps))
    c1 = CriterionResult(1, "eigenvalue law |zeta0/k^3 - 1/3| <= k/2", ok1 and dt <= 30, dt, 30,
                         {"gap": gaps, "allowed": [0.5 * k for k in K_VALUES]})
    ok2 = all(r.zeta1 >= 0.75 * r.k ** 2 and r.zeta0 >= r.k ** 4 - 1e-10 for r in reps)
    c2 = CriterionResult(2, "spectral gap zeta1 >= 3k^2/4, zeta0 >= k^4", ok2 and dt <= 30, dt, 30,
                         {"zeta1/k^2": [r.zeta1 / r.k ** 2 for r in reps],
                          "zeta0/k^4": [r.zeta0 / r.k ** 4 for r in reps]})
    return c1, c2


# ---------------------------------------------------------------------------
# Criteria 3-5: homogeneous solutions and Omega
# ---------------------------------------------------------------------------


def _closed_forms():
    grid = Grid1D.with_spacing(10.0, 0.05)
    s = solve_homogeneous(spectral_parameters(0, 0), grid)
    ref = closed_forms_zero(grid.nodes)
    errs = {
        "U1": np.max(np.abs(s.U(1) - ref["U1"])),
        "Z1": np.max(np.abs(s.Z(1) - ref["Z1"])),
        "Z2": np.max(np.abs(s.Z(2) - ref["Z2"])),
        "Z3": np.max(np.abs(s.Z(3) - ref["Z3"])),
        "Omega": np.max(np.abs(omega(s.params, s).Omega - np.array([[0, 1], [0, 0]]))),
    }
    errs = {k: float(v) for k, v in errs.items()}
    return all(v <= 1e-6 for v in errs.values()), errs


def _det_series():
    rem = []
    for s in (0.04, 0.02, 0.01):
        k, tau = s, 1j * s
        rem.append(float(abs(det_omega(k, tau) - det_omega_series(k, tau))))
    ratios = [rem[0] / rem[1], rem[1] / rem[2]]
    return all(8.0 <= r <= 24.0 for r in ratios), {"remainder": rem, "ratios": ratios}


def _pole():
    rel = []
    for k in (0.05, 0.1):
        z_pole = locate_pole(k).zeta0_from_pole
        z_eig = lowest_eigenpair(assemble(k, default_grid(k))).zeta0
        rel.append(float(abs(z_pole - z_eig) / z_eig))
    return all(r <= 1e-4 for r in rel), {"relative_error": rel}


# ---------------------------------------------------------------------------
# Criteria 6-7: semigroup kernel
# ---------------------------------------------------------------------------


def _gauss(x):
    return np.exp(-np.asarray(x) ** 2)


def _semigroup_oracles():
    disc = []
    for k, t in ((0.05, 5.0), (0.2, 5.0), (0.2, 20.0)):
        disc.append(validate_vs_timestepping(k, t, _gauss, kernel(k, t)))
    a = kernel(0.2, 2.5)
    b = kernel(0.2, 5.0)
    x, w = a.nodes, a.weights
    inner = np.abs(x) <= 6.0
    diff = (b.K - (a.K * w) @ a.K)[np.ix_(inner, inner)]
    s = np.sqrt(w[inner])
    comp = float(np.linalg.norm(s[:, None] * diff * s[None, :], 2))
    k0 = kernel(0.0, 5.0)
    inv = float(np.max(np.abs(k0.apply(du0) - du0(k0.nodes))))
    ok = max(disc) <= 1e-3 and comp <= 1e-4 and inv <= 1e-6
    return ok, {"timestepper": disc, "composition": comp, "invariant_mode": inv}


def remainder_envelope(k, t, X, Y, c=0.25):
    """Shape of the small-k remainder: lattice and pole corrections."""
    decay = np.exp(-c * k * np.abs(X - Y))
    lattice = (np.exp(-0.5 * k * k * t) / t + k * k * np.exp(-0.25 * k ** 3 * t)) * decay
    pole = np.exp(-0.5 * k * k * t) * U1(X) * (np.exp(-0.5 * k * np.abs(Y)) / np.sqrt(t) + np.exp(-np.abs(Y)) / t)
    return lattice + pole


def _explicit_pieces():
    k, t = 0.2, 20.0
    kern = kernel(k, t, regime="medium_k")
    X, Y = np.meshgrid(kern.nodes, kern.nodes, indexing="ij")
    rem = np.abs(kern.K - explicit_pieces(k, t).leading(X, Y))
    ratio = float(np.max(rem / remainder_envelope(k, t, X, Y)))
    return ratio <= REMAINDER_C, {"max_remainder/envelope": ratio, "C": REMAINDER_C}


# ---------------------------------------------------------------------------
# Criteria 8-9: nonlinear run
# ---------------------------------------------------------------------------


def criteria_simulation(quick: bool = False, config: SimulationConfig | None = None):
    """Scaling exponents and profile collapse (8), mass conservation (9)."""
    cfg = config or SimulationConfig()
    if quick:
        cfg = cfg.quick()
    amp_tol, hw_tol = (0.15, 0.08) if quick else (0.1, 0.05)
    budget = 180.0 if quick else 1200.0
    t0 = time.perf_counter()
    res = run_and_measure(cfg)
    dt = time.perf_counter() - t0
    a = res.fits["amplitude_exponent"]
    h = res.fits["half_width_exponent"]
    ok8 = abs(a + 2 / 3) <= amp_tol and abs(h - 1 / 3) <= hw_tol and res.collapse <= 0.15
    c8 = CriterionResult(8, "nonlinear scaling t^{-2/3}, t^{1/3}, collapse onto phi*", ok8 and dt <= budget,
                         dt, budget, {"amplitude_exponent": a, "half_width_exponent": h,
                                      "collapse": res.collapse, "tolerances": [amp_tol, hw_tol, 0.15]})
    c9 = CriterionResult(9, "mass drift <= 1e-8 per unit time", res.mass_drift_rate <= 1e-8, dt, budget,
                         {"drift_rate": res.mass_drift_rate})
    return c8, c9


CRITERIA = {
    3: ("closed forms at lambda = 0", 10.0, _closed_forms),
    4: ("det Omega series remainder ratio 16 +- 50%", 20.0, _det_series),
    5: ("pole vs eigensolver zeta0", 30.0, _pole),
    6: ("semigroup oracles", 120.0, _semigroup_oracles),
    7: ("explicit-piece remainder envelope", 60.0, _explicit_pieces),
}


def criterion(number: int, quick: bool = False):
    """Results for one criterion number (1-2 and 8-9 come in pairs)."""
    if number in (1, 2):
        return criteria_spectrum()[number - 1]
    if number in (8, 9):
        return criteria_simulation(quick)[number - 8]
    name, budget, fn = CRITERIA[number]
    return _timed(number, name, budget, fn)


def run_all(quick: bool = False, report=print) -> list:
    results = list(criteria_spectrum())
    for n in sorted(CRITERIA):
        name, budget, fn = CRITERIA[n]
        results.append(_timed(n, name, budget, fn))
    results.extend(criteria_simulation(quick))
    if report:
        for r in results:
            report(r.line())
    return results


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="kinklab.acceptance")
    p.add_argument("--quick", action="store_true", help="halved simulation resolution, widened tolerances")
    args = p.parse_args(argv)
    results = run_all(args.quick)
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
