"""Command line: build the surface for a map and print verification reports.

Exit status is 0 when every check passes, 1 when a check fails and 2 on
usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import AssemblyError, CurveSystem, build_surface, curve_length
from .deform import (FD_STEP, FD_TOL, SVD_RTOL, RankCertificationError, calibrate_twist,
                     crossing_angles, differential_report, select_t_star, xi_probe)
from .geodesics import (LENGTH_TOL, SearchLimitError, shadow_violations, systole_report,
                        verify_filling)
from .hyptrig import ConvergenceError, DomainError, embed_polygon, red_side_length, solve_t0
from .maps import (CATALOG_NAMES, MapStructureError, SurfaceMap, catalog, cell_dimension, counts,
                   map_type, validate)

SCHEMA_VERSION = 1
DIGITS = 12
RESIDUAL_TOL = 1e-12
ANGLE_TOL = 1e-8
XI_TOL = 1e-9
DRIFT_TOL = 1e-10
CORNER_TOL = 1e-9

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    sections: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def document(self) -> dict:
        return _clean({"schema_version": SCHEMA_VERSION, "command": self.command,
                       **self.sections, "tolerances": self.tolerances, "checks": self.checks,
                       "verdict": "pass" if self.passed else "fail"})

    def render(self, fmt: str) -> str:
        doc = self.document()
        if fmt == "structured":
            return json.dumps(doc, sort_keys=True, indent=2) + "\n"
        lines = []
        _flatten(doc, "", lines)
        return "\n".join(lines) + "\n"


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{DIGITS}g}")
    return x


def _flatten(doc, prefix, out):
    for k in sorted(doc):
        v = doc[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict) and v:
            _flatten(v, key + ".", out)
        else:
            out.append(f"{key}: {json.dumps(v) if isinstance(v, (list, dict)) else v}")


# --- inputs --------------------------------------------------------------------

def load_map(spec: str) -> SurfaceMap:
    if spec in CATALOG_NAMES:
        return catalog(spec)
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"--map {spec!r} is neither a catalog name ({', '.join(CATALOG_NAMES)}) nor a file")
    return SurfaceMap.load(path)


def _need_map(args) -> SurfaceMap:
    if not args.map:
        raise UsageError(f"{args.command} needs --map")
    return load_map(args.map)


def _map_pq(m: SurfaceMap, args) -> tuple[int, int]:
    try:
        p, q = map_type(m)
    except ValueError:
        if args.p is None or args.q is None:
            raise UsageError("map has mixed face sizes or degrees; pass --p and --q") from None
        return args.p, args.q
    if (args.p is not None and args.p != p) or (args.q is not None and args.q != q):
        raise UsageError(f"map has type {{{p},{q}}}, not {{{args.p},{args.q}}}")
    return p, q


def _surface_params(args, p, q):
    t0 = solve_t0(p, q)
    t = args.t if args.t is not None else t0
    r = args.r if args.r is not None else calibrate_twist(p, q, t, t0=t0).r
    return t0, t, r


def _instance(m, p, q, t=None, r=None) -> dict:
    return {"instance": {"map": m.name, "p": p, "q": q, "t": t, "r": r}}


# --- sections ------------------------------------------------------------------

def _polygon_section(p, q):
    t0 = solve_t0(p, q)
    s0 = red_side_length(q, t0)
    emb = embed_polygon(q, t0)
    return {"t0": t0, "s_t0": s0, "area": emb.spec.area, "circumradius": emb.circumradius,
            "balance_residual": abs(2 * t0 - p * s0),
            "relation_residual": abs(math.cos(math.pi / q) - math.sinh(t0 / 2) * math.sinh(s0 / 2))}


def _counts_section(m):
    c = counts(m)
    return {"V": c.V, "E": c.E, "F": c.F, "g": c.genus_X, "blue": c.blue, "red": c.red}


def _dimension_section(p, q, g):
    w, c = cell_dimension(p, q, g)
    return {"dim_W": w, "dim_C": c, "coefficient": float(c / (g - 1)) if g != 1 else None}


def _systole_section(m, p, t, r, args, report=None):
    curves, rep = build_surface(m, t, r)
    if report is None:
        lmax = args.lmax if args.lmax is not None else 2 * t + 0.3
        report = systole_report(rep, curves, lmax=lmax, tol=args.tol, workers=args.workers)
    kinds = report.kinds()
    bad = shadow_violations(report.classes, t, p, rep.polygon.spec.s, args.tol)
    sec = {"L0": report.systole_length, "L1": report.next_length, "margin": report.margin,
           "multiplicity": report.multiplicity, "blue": kinds.get("blue", 0), "red": kinds.get("red", 0),
           "other": kinds.get("other", 0), "search_bound": report.search_bound,
           "classes_enumerated": len(report.classes), "shadow_violations": bad}
    checks = {"systoles_are_curves": kinds.get("other", 0) == 0 and report.multiplicity == m.E + m.F,
              "margin_positive": report.margin > args.tol,
              "shadow_bounds": not bad}
    return sec, checks


def _filling_section(curves: CurveSystem):
    m = curves.surface_map
    full = verify_filling(curves)
    single = [verify_filling(curves.subsystem(red=[f for f in curves.red if f != g])).filling
              for g in curves.red]
    pairs = set()
    for cyc in m.vertices:
        faces = sorted({m.face_of[d] for d in cyc})
        pairs.update((a, b) for i, a in enumerate(faces) for b in faces[i + 1:])
    pair_breaks = [not verify_filling(curves.subsystem(red=[f for f in curves.red if f not in pr])).filling
                   for pr in sorted(pairs)]
    blue_only = verify_filling(curves.subsystem(red=[])).filling
    sec = {"filling": full.filling, "V": full.vertices, "E": full.edges, "F": full.faces,
           "euler": full.euler, "face_sizes": {str(k): v for k, v in full.face_sizes.items()},
           "single_red_removals_still_filling": sum(single), "blue_alone_fills": blue_only,
           "vertex_red_pairs_checked": len(pair_breaks)}
    checks = {"filling": full.filling, "blue_alone_not_filling": not blue_only,
              "vertex_red_pair_needed": all(pair_breaks)}
    return sec, checks


def _differential_section(m, p, q, t, r, theta):
    curves, rep = build_surface(m, t, r)
    rep_d = differential_report(rep, curves, theta)
    angles = crossing_angles(rep, curves)
    angle_err = max(abs(a - theta) for a in angles.values())
    red_err = max(abs(curve_length(rep, curves, ("red", f)) - 2 * t) for f in curves.red)
    expected_first = ((-1) ** q - 1) * math.cos(theta)
    xi_err = 0.0
    for v in range(m.V):
        vals = xi_probe(curves, v, theta).values
        want = [expected_first] + [0.0] * (len(vals) - 1)
        xi_err = max(xi_err, max(abs(a - b) for a, b in zip(vals, want)))
    drift = rep_d.blue_drift
    sec = {"rank": rep_d.rank, "red_curves": len(rep_d.rows), "blue_curves": len(rep_d.columns),
           "min_singular_value": rep_d.min_singular_value, "fd_max_residual": rep_d.fd_max_residual,
           "fd_step": FD_STEP, "angle_max_error": angle_err, "red_length_max_error": red_err,
           "xi_max_error": xi_err, "xi_first_entry": expected_first, "blue_drift": drift, "dim_W": rep_d.dim_W}
    checks = {"fd_residual": rep_d.fd_max_residual <= FD_TOL,
              "common_angle": angle_err <= ANGLE_TOL,
              "red_lengths_calibrated": red_err <= 1e-9,
              "xi_probe": xi_err <= XI_TOL,
              "twist_tangent_to_level_set": drift <= DRIFT_TOL}
    if q % 2:
        checks["full_rank"] = rep_d.rank == len(rep_d.rows)
    return sec, checks


def _tolerances(args, **extra):
    return {"length": args.tol, **extra}


# --- commands ------------------------------------------------------------------

def cmd_catalog(args) -> RunReport:
    rows = {}
    for name in CATALOG_NAMES:
        m = catalog(name)
        p, q = map_type(m)
        rows[name] = {"p": p, "q": q, **_counts_section(m)}
    return RunReport("catalog", {"maps": rows})


def cmd_validate_map(args) -> RunReport:
    m = _need_map(args)
    if args.p is not None and args.q is not None:
        p, q = args.p, args.q
    else:
        p, q = _map_pq(m, args)
    rep = validate(m, p, q)
    sec = {"V": m.V, "E": m.E, "F": m.F, "girth": rep.girth, "reasons": rep.reasons,
           "connected": m.is_connected()}
    return RunReport("validate-map", {**_instance(m, p, q), "map": sec}, {"valid": rep.passed})


def cmd_build(args) -> RunReport:
    m = _need_map(args)
    p, q = _map_pq(m, args)
    t0, t, r = _surface_params(args, p, q)
    curves, rep = build_surface(m, t, r)
    blue = [curve_length(rep, curves, ("blue", e)) for e in curves.blue]
    red = [curve_length(rep, curves, ("red", f)) for f in curves.red]
    sec = {"corner_residual": rep.corner_residual, "tiles": rep.tiles,
           "blue_lengths": [min(blue), max(blue)], "red_lengths": [min(red), max(red)],
           "crossings": len(curves.crossings)}
    checks = {"corners_close": rep.corner_residual <= CORNER_TOL,
              "blue_length_2t": max(abs(b - 2 * t) for b in blue) <= 1e-9}
    return RunReport("build", {**_instance(m, p, q, t, r), "polygon": _polygon_section(p, q),
                               "counts": _counts_section(m), "surface": sec}, checks,
                     _tolerances(args, corner=CORNER_TOL))


def cmd_systoles(args) -> RunReport:
    m = _need_map(args)
    p, q = _map_pq(m, args)
    t0, t, r = _surface_params(args, p, q)
    sec, checks = _systole_section(m, p, t, r, args)
    return RunReport("systoles", {**_instance(m, p, q, t, r), "systoles": sec}, checks, _tolerances(args))


def cmd_filling(args) -> RunReport:
    m = _need_map(args)
    p, q = _map_pq(m, args)
    validate_or_raise(m, p, q)
    sec, checks = _filling_section(CurveSystem(m))
    sec["genus"] = counts(m).genus_X
    return RunReport("filling", {**_instance(m, p, q), "filling": sec}, checks)


def validate_or_raise(m, p, q):
    rep = validate(m, p, q)
    if not rep:
        raise AssemblyError("invalid map: " + "; ".join(rep.reasons))


def _calibration_grid(p, q, t0, tol):
    worst = 0.0
    for k in range(1, 21):
        cal = calibrate_twist(p, q, t0 + 0.01 * k, t0=t0)
        worst = max(worst, cal.pythagoras_residual, cal.angle_residual)
    return worst


def cmd_calibrate(args) -> RunReport:
    if args.map:
        m = load_map(args.map)
        p, q = _map_pq(m, args)
    elif args.p is not None and args.q is not None:
        m, p, q = None, args.p, args.q
    else:
        raise UsageError("calibrate needs --map or both --p and --q")
    t0 = solve_t0(p, q)
    sections = {}
    checks = {}
    if m is not None and args.t is None:
        found = select_t_star(m, tol=args.tol, workers=args.workers)
        cal = found.deformation
        sections["systoles"] = {"L0": found.systoles.systole_length, "L1": found.systoles.next_length,
                                "multiplicity": found.systoles.multiplicity, "grid_steps": found.steps_tried}
    else:
        t = args.t if args.t is not None else t0 + 0.01
        cal = calibrate_twist(p, q, t, t0=t0)
    grid = _calibration_grid(p, q, t0, args.tol)
    at_t0 = calibrate_twist(p, q, t0, t0=t0)
    sections["calibration"] = {"t0": t0, "t_star": cal.t, "r_star": cal.r, "theta": cal.theta,
                               "cos_theta": math.cos(cal.theta), "margin": cal.margin,
                               "pythagoras_residual": cal.pythagoras_residual,
                               "angle_residual": cal.angle_residual, "grid_max_residual": grid}
    checks.update({"residuals": max(cal.pythagoras_residual, cal.angle_residual, grid) <= RESIDUAL_TOL,
                   "theta_below_right_angle": cal.theta < math.pi / 2 if cal.t > t0 else True,
                   "t0_untwisted": at_t0.r == 0.0 and at_t0.theta == math.pi / 2})
    inst = _instance(m, p, q, cal.t, cal.r) if m is not None else {
        "instance": {"map": None, "p": p, "q": q, "t": cal.t, "r": cal.r}}
    return RunReport("calibrate", {**inst, **sections}, checks,
                     _tolerances(args, residual=RESIDUAL_TOL))


def cmd_differential(args) -> RunReport:
    m = _need_map(args)
    p, q = _map_pq(m, args)
    t0 = solve_t0(p, q)
    t = args.t if args.t is not None else t0 + 0.01
    cal = calibrate_twist(p, q, t, t0=t0)
    r = args.r if args.r is not None else cal.r
    sec, checks = _differential_section(m, p, q, t, r, cal.theta)
    sec["theta"] = cal.theta
    return RunReport("differential", {**_instance(m, p, q, t, r), "differential": sec}, checks,
                     _tolerances(args, fd=FD_TOL, angle=ANGLE_TOL, xi=XI_TOL, svd_rtol=SVD_RTOL,
                                 drift=DRIFT_TOL))


def cmd_dimension(args) -> RunReport:
    if args.p is None or args.q is None or args.g is None:
        raise UsageError("dimension needs --p, --q and --g")
    sec = _dimension_section(args.p, args.q, args.g)
    coeff = 6 - Fraction(args.q, args.q - 2) - Fraction(2 * args.q, args.p * (args.q - 2))
    sec["coefficient_exact"] = coeff
    return RunReport("dimension", {"instance": {"p": args.p, "q": args.q, "g": args.g}, "dimensions": sec},
                     {"positive": coeff > 0})


def cmd_verify_all(args) -> RunReport:
    m = _need_map(args)
    p, q = _map_pq(m, args)
    validate_or_raise(m, p, q)
    checks = {}
    sections = {}
    poly = _polygon_section(p, q)
    t0 = poly["t0"]
    sections["polygon"] = poly
    checks["balance"] = poly["balance_residual"] <= RESIDUAL_TOL and poly["relation_residual"] <= RESIDUAL_TOL
    sections["counts"] = _counts_section(m)
    g = sections["counts"]["g"]
    sections["dimensions"] = _dimension_section(p, q, g)

    sys_sec, sys_checks = _systole_section(m, p, t0, 0.0, args)
    sys_sec["L0_minus_2t0"] = sys_sec["L0"] - 2 * t0
    sections["systoles"] = sys_sec
    checks.update({f"systoles.{k}": v for k, v in sys_checks.items()})
    checks["systoles.L0_is_2t0"] = abs(sys_sec["L0_minus_2t0"]) <= args.tol

    fill_sec, fill_checks = _filling_section(CurveSystem(m))
    sections["filling"] = fill_sec
    checks.update({f"filling.{k}": v for k, v in fill_checks.items()})

    found = select_t_star(m, tol=args.tol, workers=args.workers)
    cal = found.deformation
    sections["calibration"] = {"t_star": cal.t, "r_star": cal.r, "theta": cal.theta, "margin": cal.margin,
                               "L1": found.systoles.next_length, "grid_steps": found.steps_tried,
                               "pythagoras_residual": cal.pythagoras_residual,
                               "angle_residual": cal.angle_residual,
                               "grid_max_residual": _calibration_grid(p, q, t0, args.tol)}
    checks["calibration.residuals"] = max(cal.pythagoras_residual, cal.angle_residual,
                                          sections["calibration"]["grid_max_residual"]) <= RESIDUAL_TOL
    checks["calibration.margin"] = cal.margin > 10 * args.tol

    diff_sec, diff_checks = _differential_section(m, p, q, cal.t, cal.r, cal.theta)
    sections["differential"] = diff_sec
    checks.update({f"differential.{k}": v for k, v in diff_checks.items()})
    return RunReport("verify-all", {**_instance(m, p, q, t0, 0.0), **sections}, checks,
                     _tolerances(args, residual=RESIDUAL_TOL, fd=FD_TOL, angle=ANGLE_TOL, xi=XI_TOL,
                                 svd_rtol=SVD_RTOL, drift=DRIFT_TOL, corner=CORNER_TOL))


COMMANDS = {
    "catalog": (cmd_catalog, "list the built-in maps"),
    "validate-map": (cmd_validate_map, "check degrees, face sizes and girth of a map"),
    "build": (cmd_build, "glue the surface and report its polygon and curve lengths"),
    "systoles": (cmd_systoles, "enumerate short closed geodesics and report the systoles"),
    "filling": (cmd_filling, "check that the blue and red curves fill"),
    "calibrate": (cmd_calibrate, "twist so that red and blue curves have equal length"),
    "differential": (cmd_differential, "rank and finite-difference check of the red-length differential"),
    "dimension": (cmd_dimension, "dimensions of the level set and the cell"),
    "verify-all": (cmd_verify_all, "run every check on one map"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--map", help="catalog name or path to a map file")
    common.add_argument("--p", type=int, help="face size")
    common.add_argument("--q", type=int, help="vertex degree")
    common.add_argument("--t", type=float, help="blue side length (default t0)")
    common.add_argument("--r", type=float, help="twist (default: calibrated for --t)")
    common.add_argument("--g", type=int, help="genus, for the dimension command")
    common.add_argument("--lmax", type=float, help="initial geodesic search bound (default 2t + 0.3)")
    common.add_argument("--tol", type=float, default=LENGTH_TOL, help="length tolerance (default %(default)g)")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--workers", type=int, default=1, help="processes for the geodesic search")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="systolefill", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, helptext) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=helptext, description=helptext)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    if not args.tol > 0:
        parser.error("--tol must be positive")
    try:
        report = COMMANDS[args.command][0](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (MapStructureError, DomainError, AssemblyError, KeyError, OSError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (SearchLimitError, RankCertificationError, ConvergenceError) as exc:
        print(f"{parser.prog}: verification failed: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(report.render(args.format))
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
