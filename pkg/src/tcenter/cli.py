"""``tcenter`` command line.

Exit codes: 0 success, 2 input error, 3 invariant violation, 4 map not
orbit-preserving, 5 local-diffeomorphism criterion violated.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import io
from .deform import BumpProfile, CriterionViolated, NotInjectiveOnUb, beta, fix_boundary, homotopy_A
from .expr import NonPolynomialError, ParseError, Poly2, gcd_poly
from .field import CenterCase, FieldError, GcdMismatch, level_point
from .flow import TOL_RANGE, period, trajectory
from .integrate import IntegrationError
from .plot import COLORS, orbit_polyline, render_svg
from .shift import (
    BranchConflict,
    FlowShift,
    MapSpec,
    MapSpecError,
    NotMultiple,
    NotOrbitPreserving,
    ShiftGrid,
    apply_map,
    lie_derivative,
    recover_shift,
    scalar_fn,
)
from .verify import run_verify

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_ORBIT, EXIT_CRITERION = 0, 2, 3, 4, 5


class InputError(ValueError):
    pass


class InvariantViolation(ArithmeticError):
    pass


# -- argument helpers -----------------------------------------------------------

def _grid(text: str) -> tuple[int, int]:
    try:
        L, A = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 16x16, got {text!r}")
    return L, A


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _globals(parser: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--tol", type=float, default=d(1e-10), help="integration tolerance")
    parser.add_argument("--grid", type=_grid, default=d((16, 16)), help="levels x angles, e.g. 16x16")
    parser.add_argument("--seed", type=int, default=d(0))
    parser.add_argument("--out", default=d(None), help="output directory")
    parser.add_argument("--json", action="store_true", default=d(False), help="JSON on stdout")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tcenter", description="Numerics for planar vector fields with a topological center.")
    _globals(p, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)
    sub = p.add_subparsers(dest="cmd", required=True)

    f = sub.add_parser("field", parents=[common], help="build and classify a field")
    f.add_argument("spec", help="field spec file or bundled name (%s)" % ", ".join(io.bundled_names("fields")))

    fl = sub.add_parser("flow", parents=[common], help="sample a trajectory")
    fl.add_argument("spec")
    fl.add_argument("--z", type=_floats, required=True, help="start point x,y")
    fl.add_argument("--t", type=float, required=True, help="end time")
    fl.add_argument("--n", type=int, default=100, help="number of intervals")

    pe = sub.add_parser("period", parents=[common], help="period scan along a ray")
    pe.add_argument("spec")
    pe.add_argument("--angle", type=float, default=0.0)
    pe.add_argument("--levels", type=_floats, default=[1.0, 0.1, 0.01, 0.001])

    sh = sub.add_parser("shift", parents=[common], help="shift functions")
    shs = sh.add_subparsers(dest="shift_cmd", required=True)
    rec = shs.add_parser("recover", parents=[common], help="recover the shift function of a map")
    rec.add_argument("spec")
    rec.add_argument("map", help="map spec file or bundled name (%s)" % ", ".join(io.bundled_names("maps")))
    rec.add_argument("--anchor", type=_floats, default=None, help="x,y,t0")

    de = sub.add_parser("deform", parents=[common], help="boundary fixing and the homotopy A")
    de.add_argument("spec")
    de.add_argument("map")
    de.add_argument("--a", type=float, default=None)
    de.add_argument("--b", type=float, default=None)
    de.add_argument("--frames", type=int, default=0, help="number of SVG frames over t in [0, 1]")
    de.add_argument("--lambda-scale", type=float, default=1.0, help="multiply the shift function")

    sub.add_parser("verify", parents=[common], help="run the invariant suite")

    pl = sub.add_parser("plot", parents=[common], help="SVG phase portrait")
    pl.add_argument("spec")
    pl.add_argument("--levels", type=_floats, default=[0.25, 0.5, 0.75, 1.0])
    pl.add_argument("--map", default=None, help="also draw the images of the orbits under this map")
    pl.add_argument("--n", type=int, default=240)
    return p


def _check_config(args):
    if not (TOL_RANGE[0] <= args.tol <= TOL_RANGE[1]):
        raise InputError(f"--tol {args.tol!r} outside {TOL_RANGE}")
    if min(args.grid) < 8:
        raise InputError("--grid must be at least 8x8")


def _emit(args, name: str, text: str, quiet: bool = False):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w", newline="\n") as fh:
            fh.write(text)
    elif not quiet:
        sys.stdout.write(text)


def _need_integral(lf, what: str):
    if lf.intspec is None:
        raise InputError(f"{what} needs a first integral; this field spec has none")
    return lf.intspec


# -- commands -------------------------------------------------------------------

def cmd_field(args) -> int:
    lf = io.load_field(args.spec)
    fs = lf.fs
    coprime = gcd_poly(fs.F1, fs.F2).is_constant() if not (fs.F1.is_zero() or fs.F2.is_zero()) else False
    report = {
        "name": fs.name,
        "F1": str(fs.F1),
        "F2": str(fs.F2),
        "nabla": fs.nabla.to_json(),
        "case": fs.case.value,
        "coprime": coprime,
        "integral": str(lf.intspec.f) if lf.intspec is not None else None,
    }
    if args.json or args.out:
        _emit(args, "field.json", io.dumps(report))
    else:
        for k, v in report.items():
            print(f"{k}: {v}")
    if fs.case is CenterCase.NotTC:
        print("field is not a topological center at O", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_flow(args) -> int:
    lf = io.load_field(args.spec)
    if len(args.z) != 2 or args.n < 1:
        raise InputError("--z needs two numbers and --n must be positive")
    tr = trajectory(lf.fs, args.z, args.t, args.n, args.tol)
    _emit(args, "trajectory.csv", io.csv_text("t,x,y", tr.rows()))
    return EXIT_OK


def cmd_period(args) -> int:
    lf = io.load_field(args.spec)
    intspec = _need_integral(lf, "period")
    rows = []
    for c in args.levels:
        if not 0 < c <= 1:
            raise InputError(f"level {c} outside (0, 1]")
        z = level_point(intspec, c, args.angle)
        s = period(lf.fs, intspec, z, args.tol)
        rows.append((float(c), s.z[0], s.z[1], s.theta, s.residual))
    _emit(args, "period.csv", io.csv_text("level,x,y,theta,residual", rows))
    return EXIT_OK


def _single_poly_shift(m: MapSpec) -> Poly2 | None:
    if len(m.primitives) == 1 and isinstance(m.primitives[0], FlowShift) and isinstance(m.primitives[0].alpha, Poly2):
        return m.primitives[0].alpha
    return None


def cmd_shift_recover(args) -> int:
    lf = io.load_field(args.spec)
    intspec = _need_integral(lf, "shift recovery")
    m = io.load_map(args.map)
    anchor = None
    if args.anchor is not None:
        if len(args.anchor) != 3:
            raise InputError("--anchor needs x,y,t0")
        anchor = (args.anchor[:2], args.anchor[2])
    L, A = args.grid
    s = recover_shift(lf.fs, intspec, m, anchor=anchor, n_levels=L, n_angles=A, tol=args.tol)
    report = {"field": lf.fs.name, "map": m.name, "grid": [L, A], "residual": s.residual,
              "theta_min": float(np.min(s.theta)), "theta_max": float(np.max(s.theta))}
    alpha = _single_poly_shift(m)
    if alpha is not None or not m.primitives:
        ref = scalar_fn(alpha if alpha is not None else 0)(s.points[..., 0], s.points[..., 1])
        report["sup_error"] = float(np.max(np.abs(s.values - ref)))
    if args.out:
        _emit(args, "shift.csv", s.to_csv())
        _emit(args, "shift_report.json", io.dumps(report))
    if args.json:
        sys.stdout.write(io.dumps(report))
    elif not args.out:
        sys.stdout.write(s.to_csv())
        for k, v in report.items():
            print(f"# {k}: {v if not isinstance(v, float) else io.fmt(v)}", file=sys.stderr)
    return EXIT_OK


def cmd_deform(args) -> int:
    lf = io.load_field(args.spec)
    fs = lf.fs
    intspec = _need_integral(lf, "deform")
    m = io.load_map(args.map)
    L, A = args.grid
    grid = ShiftGrid(fs, intspec, L, A, args.tol)
    alpha = _single_poly_shift(m)
    scale = Fraction(args.lambda_scale)
    if alpha is not None:
        lam = alpha.scale(scale)
        m = MapSpec((FlowShift(lam),), m.name if scale == 1 else f"{m.name}*{args.lambda_scale:g}")
    else:
        rec = recover_shift(fs, intspec, m, grid=grid, tol=args.tol)
        lam = rec.with_values(float(scale) * rec.values)
        if scale != 1:
            m = MapSpec((FlowShift(lam.interpolator(intspec)),), f"{m.name}*{args.lambda_scale:g}")
    profile = None
    if args.a is not None or args.b is not None:
        if args.a is None or args.b is None:
            raise InputError("--a and --b go together")
        profile = BumpProfile(args.a, args.b)
    omega_p, rep = fix_boundary(fs, intspec, m, lam, profile, grid, args.tol)
    profile = BumpProfile(rep.a, rep.b)
    lam_fn = lam.interpolator(intspec) if hasattr(lam, "interpolator") else scalar_fn(lam)

    Z = grid.flat()
    full = apply_map(MapSpec((FlowShift(lam_fn),)), Z, fs, args.tol)
    trunc = apply_map(omega_p, Z, fs, args.tol)
    dev1 = float(np.max(np.hypot(*(homotopy_A(fs, intspec, lam_fn, profile, 1.0, 0.0, Z, args.tol) - full).T)))
    dev0 = float(np.max(np.hypot(*(homotopy_A(fs, intspec, lam_fn, profile, 0.0, 0.0, Z, args.tol) - trunc).T)))
    ts = np.linspace(0.0, 1.0, args.frames) if args.frames > 1 else np.array([0.0, 0.5, 1.0])
    min_lie = math.inf
    for t in ts:
        v, _ = lie_derivative(fs, lambda x, y, t=t: beta(intspec, lam_fn, profile, t, 0.0, np.column_stack([x, y])), Z)
        min_lie = min(min_lie, float(np.min(v)))
    if min_lie <= -1:
        raise CriterionViolated(f"F(beta_t) reaches {io.fmt(min_lie)} along the homotopy")
    report = {
        "field": fs.name,
        "map": m.name,
        "profile": {"a": rep.a, "b": rep.b},
        "endpoint_deviation": {"t1_vs_shift": dev1, "t0_vs_fix_boundary": dev0},
        "min_lie_derivative": min_lie,
        "boundary_residual": rep.boundary_residual,
        "ua_deviation": rep.ua_deviation,
        "frames": int(args.frames),
    }
    if args.frames > 0:
        levels = [0.25, 0.5, 0.75, 1.0]
        orbits = [orbit_polyline(fs, intspec, c, 120, args.tol) for c in levels]
        for i, t in enumerate(ts[: args.frames] if args.frames > 1 else [0.0]):
            curves = [(P, "#999999", False) for P in orbits]
            marks = [homotopy_A(fs, intspec, lam_fn, profile, float(t), 0.0, P[:: 10], args.tol) for P in orbits]
            curves += [(np.vstack([M, M[:1]]), COLORS[j % len(COLORS)], True) for j, M in enumerate(marks)]
            _emit(args, f"frame_{i:03d}.svg", render_svg(curves, f"t={io.fmt(float(t))}"), quiet=True)
    if args.out:
        _emit(args, "deform.json", io.dumps(report))
    if args.json or not args.out:
        sys.stdout.write(io.dumps(report))
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_verify(args.seed, args.tol, args.grid if args.grid != (16, 16) else (8, 8))
    summary = {"seed": args.seed, "tol": args.tol, "checks": [c.to_json() for c in checks],
               "passed": all(c.passed for c in checks)}
    if args.out:
        _emit(args, "verify.json", io.dumps(summary))
    if args.json:
        sys.stdout.write(io.dumps(summary))
    elif not args.out:
        w = max(len(c.name) for c in checks)
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{w}}  value={io.fmt(c.value)}  bound={io.fmt(c.bound)}")
    return EXIT_OK if summary["passed"] else EXIT_INVARIANT


def cmd_plot(args) -> int:
    lf = io.load_field(args.spec)
    intspec = _need_integral(lf, "plot")
    curves = []
    for j, c in enumerate(args.levels):
        if not 0 < c <= 1:
            raise InputError(f"level {c} outside (0, 1]")
        curves.append((orbit_polyline(lf.fs, intspec, c, args.n, args.tol), COLORS[j % len(COLORS)], False))
    if args.map:
        m = io.load_map(args.map)
        for P, color, _ in list(curves):
            curves.append((apply_map(m, P[::8], lf.fs, args.tol), color, True))
    _emit(args, "portrait.svg", render_svg(curves, lf.fs.name))
    return EXIT_OK


COMMANDS = {"field": cmd_field, "flow": cmd_flow, "period": cmd_period, "deform": cmd_deform,
            "verify": cmd_verify, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        _check_config(args)
        fn = cmd_shift_recover if args.cmd == "shift" else COMMANDS[args.cmd]
        return fn(args)
    except NotOrbitPreserving as exc:
        print(f"error: not orbit-preserving: {exc}", file=sys.stderr)
        return EXIT_ORBIT
    except (CriterionViolated, NotInjectiveOnUb) as exc:
        print(f"error: criterion violated: {exc}", file=sys.stderr)
        return EXIT_CRITERION
    except (GcdMismatch, BranchConflict, NotMultiple, InvariantViolation, IntegrationError) as exc:
        print(f"error: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ParseError, NonPolynomialError, FieldError, MapSpecError, InputError, FileNotFoundError,
            json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
