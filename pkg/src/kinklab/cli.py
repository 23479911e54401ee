"""
Command-line interface
======================

``kinklab <subcommand> [options]`` with subcommands ``spectrum``,
``homsol``, ``omega``, ``resolvent``, ``semigroup``, ``simulate``,
``asymptotics`` and ``verify-all``.  Every subcommand writes CSV files and a
``manifest.json`` into ``--out`` (default ``$KINKLAB_OUT`` or
``./kinklab_out``).

Exit codes: 0 success, 1 acceptance criteria failed, 2 invalid input,
3 numerical failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from dataclasses import replace

import numpy as np
from scipy import fft as sfft

from . import __version__
from .errors import NumericalFailure, ValidationError

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(v) -> str:
    """Round-trip decimal formatting."""
    return format(float(v), ".17g")


def complex_arg(s: str) -> complex:
    try:
        return complex(s.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {s!r}") from exc


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def write_manifest(out_dir, name, config, seconds, outputs):
    """Write ``manifest.json`` atomically (temporary file, then rename)."""
    data = {"subcommand": name, "config": config, "version": __version__,
            "wall_seconds": seconds, "outputs": [os.path.basename(p) for p in outputs]}
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest", suffix=".json")
    with os.fdopen(fd, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
    path = os.path.join(out_dir, "manifest.json")
    os.replace(tmp, path)
    return path


# ---------------------------------------------------------------------------
# Subcommands: each returns (config dict, output paths, exit code)
# ---------------------------------------------------------------------------


def cmd_spectrum(args, out):
    from .spectrum import assemble, default_grid, lowest_eigenpair

    rows = []
    for k in args.k:
        rep = lowest_eigenpair(assemble(k, default_grid(k, args.dx)), tol=args.tol or 1e-9)
        rows.append([k, rep.zeta0, rep.zeta1, rep.zeta0 / k ** 3 if k else float("nan")])
    path = write_csv(os.path.join(out, "spectrum.csv"), ["k", "zeta0", "zeta1", "zeta0_over_k3"], rows)
    return {"k": args.k, "dx": args.dx}, [path]


def cmd_homsol(args, out):
    from .homogeneous import DEFAULT_RTOL, solve_homogeneous, spectral_parameters
    from .numerics import Grid1D

    grid = Grid1D.with_spacing(args.L, args.dx)
    s = solve_homogeneous(spectral_parameters(args.k, args.tau), grid, rtol=args.tol or DEFAULT_RTOL)
    cols = [s.U(j) for j in (1, 2, 3, 4)] + [s.Z(j) for j in (1, 2, 3, 4)]
    names = [f"U{j}" for j in (1, 2, 3, 4)] + [f"Z{j}" for j in (1, 2, 3, 4)]
    header = ["x"] + [f"{n}_{p}" for n in names for p in ("re", "im")]
    rows = ([x] + [f(c[i]) for c in cols for f in (np.real, np.imag)] for i, x in enumerate(s.x))
    path = write_csv(os.path.join(out, "homsol.csv"), header, rows)
    return {"k": args.k, "tau": str(args.tau), "L": args.L, "dx": args.dx}, [path]


def cmd_omega(args, out):
    from .resolvent import assemble_at, locate_pole

    a = assemble_at(args.k, args.tau)
    O = a.Omega
    row = [args.k, args.tau.real, args.tau.imag] + [f(v) for v in O.ravel() for f in (np.real, np.imag)]
    row += [a.detOmega.real, a.detOmega.imag]
    header = ["k", "tau_re", "tau_im"] + [f"Omega{i}{j}_{p}" for i in (1, 2) for j in (1, 2) for p in ("re", "im")]
    header += ["det_re", "det_im"]
    paths = [write_csv(os.path.join(out, "omega.csv"), header, [row])]
    if args.pole:
        rep = locate_pole(args.k)
        paths.append(write_csv(os.path.join(out, "pole.csv"), ["k", "p_re", "p_im", "zeta0_re", "zeta0_im"],
                               [[args.k, rep.p.real, rep.p.imag, rep.zeta0_from_pole.real,
                                 rep.zeta0_from_pole.imag]]))
    return {"k": args.k, "tau": str(args.tau), "pole": args.pole}, paths


def cmd_resolvent(args, out):
    from .resolvent import resolvent_matrix

    nodes = np.linspace(-args.L, args.L, args.n)
    R = resolvent_matrix(args.k, args.tau, nodes)
    rows = ([x, y, R[i, j].real, R[i, j].imag] for i, x in enumerate(nodes) for j, y in enumerate(nodes))
    path = write_csv(os.path.join(out, "resolvent.csv"), ["x", "y", "R_re", "R_im"], rows)
    return {"k": args.k, "tau": str(args.tau), "L": args.L, "n": args.n}, [path]


def cmd_semigroup(args, out):
    from .numerics import Grid1D
    from .semigroup import DEFAULT_TOL, kernel

    nodes = Grid1D.with_spacing(args.L, args.dx).nodes
    kern = kernel(args.k, args.t, tol=args.tol or DEFAULT_TOL, nodes=nodes, regime=args.regime)
    x = kern.nodes
    rows = ([x[i], x[j], kern.K[i, j], kern.K0[i, j], kern.K1[i, j], kern.S[i, j]]
            for i in range(x.size) for j in range(x.size))
    path = write_csv(os.path.join(out, "semigroup.csv"), ["x", "y", "K", "K0", "K1", "S"], rows)
    meta = {"k": args.k, "t": args.t, "L": args.L, "dx": args.dx, "regime": kern.regime,
            "method": kern.method, "quad_error": kern.quad_error, "imag_residual": kern.imag_residual}
    return meta, [path]


def cmd_simulate(args, out):
    from .simulator import SimulationConfig, run_and_measure

    cfg = SimulationConfig.from_file(args.config)
    if args.quick:
        cfg = cfg.quick()
    if args.out_given or not cfg.out_dir:
        cfg = replace(cfg, out_dir=out)
    os.makedirs(cfg.out_dir, exist_ok=True)
    progress = (lambda r: print(f"t={r.t:.4g} center={r.center_amp:.6g} r_half={r.half_width:.4g}",
                                file=sys.stderr)) if args.verbose else None
    with sfft.set_workers(args.threads):
        res = run_and_measure(cfg, progress=progress)
    summary = {"A": res.A, "A_exact": res.A_exact, "collapse": res.collapse,
               "mass_drift_rate": res.mass_drift_rate, **res.fits}
    path = write_csv(os.path.join(cfg.out_dir, "fits.csv"), list(summary), [list(summary.values())])
    return {**cfg.to_dict(), "quick": args.quick}, res.outputs + [path], cfg.out_dir


def cmd_asymptotics(args, out):
    from .profiles import du0, phi, phi_half_width

    r = np.linspace(0.0, args.rmax, args.n)
    p = phi(r, args.t, args.d)
    paths = [write_csv(os.path.join(out, "asymptotics.csv"), ["r", "phi", "amplitude"],
                       ([ri, pi, 0.5 * args.A * du0(0.0) * pi] for ri, pi in zip(r, p)))]
    paths.append(write_csv(os.path.join(out, "half_width.csv"), ["t", "half_width"],
                           [[args.t, phi_half_width(args.t, args.d)]]))
    return {"t": args.t, "A": args.A, "d": args.d, "rmax": args.rmax, "n": args.n}, paths


def cmd_verify_all(args, out):
    from .acceptance import run_all

    with sfft.set_workers(args.threads):
        results = run_all(args.quick)
    rows = [[str(r.number), r.name, "pass" if r.passed else "fail", r.seconds, r.budget,
             json.dumps(r.details)] for r in results]
    path = write_csv(os.path.join(out, "acceptance.csv"),
                     ["criterion", "name", "result", "seconds", "budget", "details"], rows)
    code = EXIT_OK if all(r.passed for r in results) else EXIT_FAILED
    return {"quick": args.quick}, [path], out, code


# ---------------------------------------------------------------------------
# Parser and dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default=None, help="output directory (default $KINKLAB_OUT or ./kinklab_out)")
    common.add_argument("--tol", type=float, default=None, help="module tolerance override")
    common.add_argument("--threads", type=int, default=1, help="worker threads for FFTs")
    p = _Parser(prog="kinklab", description="Kink stability toolkit for the Cahn-Hilliard equation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("spectrum", parents=[common], help="lowest eigenvalues of D_k H_k")
    s.add_argument("--k", type=float, nargs="+", required=True)
    s.add_argument("--dx", type=float, default=0.04)
    s.set_defaults(fn=cmd_spectrum)

    for name, fn, help_ in (("homsol", cmd_homsol, "homogeneous solutions u_j^+, z_j^-"),
                            ("omega", cmd_omega, "Omega matrix and its determinant"),
                            ("resolvent", cmd_resolvent, "resolvent kernel matrix")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--k", type=float, required=True)
        s.add_argument("--tau", type=complex_arg, required=True)
        if name == "homsol":
            s.add_argument("--L", type=float, default=10.0)
            s.add_argument("--dx", type=float, default=0.25)
        if name == "omega":
            s.add_argument("--pole", action="store_true", help="also locate the pole p(k)")
        if name == "resolvent":
            s.add_argument("--L", type=float, default=10.0)
            s.add_argument("--n", type=int, default=41)
        s.set_defaults(fn=fn)

    s = sub.add_parser("semigroup", parents=[common], help="semigroup kernel e^{-t D_k H_k}")
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--L", type=float, default=20.0)
    s.add_argument("--dx", type=float, default=0.1)
    s.add_argument("--regime", choices=("small_k", "medium_k", "large_k"), default=None)
    s.set_defaults(fn=cmd_semigroup)

    s = sub.add_parser("simulate", parents=[common], help="nonlinear relaxation run")
    s.add_argument("--config", required=True, help="flat key = value config file")
    s.add_argument("--quick", action="store_true", help="halve the resolution")
    s.add_argument("--verbose", action="store_true", help="print diagnostics while running")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("asymptotics", parents=[common], help="self-similar transverse profile")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--A", type=float, default=1.0)
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--rmax", type=float, default=20.0)
    s.add_argument("--n", type=int, default=201)
    s.set_defaults(fn=cmd_asymptotics)

    s = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    s.add_argument("--quick", action="store_true", help="reduced simulation resolution")
    s.set_defaults(fn=cmd_verify_all)
    return p


def dispatch(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.threads < 1:
        print("kinklab: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    args.out_given = args.out is not None
    out = args.out or os.environ.get("KINKLAB_OUT") or "kinklab_out"
    t0 = time.perf_counter()
    try:
        os.makedirs(out, exist_ok=True)
        result = args.fn(args, out)
    except ValidationError as exc:
        print(f"kinklab {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"kinklab {args.command}: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    config, outputs = result[0], result[1]
    out_dir = result[2] if len(result) > 2 else out
    code = result[3] if len(result) > 3 else EXIT_OK
    config.setdefault("tol", args.tol)
    config.setdefault("threads", args.threads)
    write_manifest(out_dir, args.command, config, time.perf_counter() - t0, outputs)
    return code


def main(argv=None) -> int:
    code = dispatch(argv)
    if argv is None:
        sys.exit(code)
    return code
