"""Twisting the blue curves: calibration, crossing angles and the length differential.

Twisting every blue curve by the same ``r`` keeps blue lengths at ``2t`` and
stretches each red curve to ``mu`` with ``cosh(mu/2p) = cosh(r/2) cosh(s/2)``.
The calibrated twist makes ``mu = 2t``; the red curves then cross the blue
ones at a common angle ``theta`` with ``sinh(s/2) = sin(theta) sinh(mu/2p)``.
Derivatives of red lengths along blue twists are sums of ``cos`` of the
crossing angles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import plane
from .assembly import CurveSystem, HolonomyRep, build_surface, curve_length, tile_of
from .geodesics import LENGTH_TOL, SystoleReport, systole_report
from .hyptrig import DomainError, red_side_length, solve_t0
from .maps import SurfaceMap, cell_dimension, counts, map_type

FD_STEP = 1e-5
FD_TOL = 1e-6
SVD_RTOL = 1e-9
SVD_ATOL = 1e-12


class RankCertificationError(RuntimeError):
    """Exact and floating-point ranks disagree."""


@dataclass(frozen=True)
class CalibratedDeformation:
    p: int
    q: int
    t: float
    s: float
    r: float
    mu: float
    theta: float
    margin: float | None = None

    @property
    def pythagoras_residual(self) -> float:
        return abs(math.cosh(self.mu / (2 * self.p))
                   - math.cosh(self.r / 2) * math.cosh(self.s / 2))

    @property
    def angle_residual(self) -> float:
        return abs(math.sinh(self.s / 2) - math.sin(self.theta) * math.sinh(self.mu / (2 * self.p)))


def calibrate_twist(p: int, q: int, t: float, tol: float = 1e-12,
                    t0: float | None = None) -> CalibratedDeformation:
    """Twist making the red curves as long as the blue ones."""
    if t0 is None:
        t0 = solve_t0(p, q)
    s = red_side_length(q, t)
    if t < t0 - tol:
        raise DomainError(f"t = {t!r} lies below t0 = {t0!r}; no real twist exists")
    if abs(2 * t - p * s) <= tol or t <= t0:
        return CalibratedDeformation(p, q, t, s, 0.0, 2 * t, math.pi / 2)
    a = t / p
    # cosh(a)^2 - cosh(s/2)^2 = sinh(a - s/2) sinh(a + s/2), stable near t0
    sh = math.sqrt(math.sinh(a - s / 2) * math.sinh(a + s / 2)) / math.cosh(s / 2)
    r = 2 * math.asinh(sh)
    theta = math.asin(min(1.0, math.sinh(s / 2) / math.sinh(a)))
    return CalibratedDeformation(p, q, t, s, r, 2 * t, theta)


# --- angles --------------------------------------------------------------------

def _crossing_angle(rep: HolonomyRep, curves: CurveSystem, d: int) -> float:
    m = curves.surface_map
    f, e = m.face_of[d], m.edge_of[d]
    red = plane.axis(rep.word_matrix(curves.red_word(f, start=d)))
    blue = rep.polygon.side_lines[2 * m.position_of[d]]
    x = plane.line_intersection(red, blue)
    if x is None:
        raise DomainError(f"red {f} and blue {e} axes do not meet at dart {d}")
    u = plane.line_tangent(red, x)
    v = plane.line_tangent(blue, x)
    return plane.ccw_angle(x, u, v) % math.pi


def measure_angle(rep: HolonomyRep, curves: CurveSystem, red: int, blue: int) -> float:
    """Counter-clockwise angle in (0, pi) from the red axis to the blue one where they cross."""
    if not curves.incident(red, blue):
        raise DomainError(f"red {red} and blue {blue} do not intersect")
    return _crossing_angle(rep, curves, curves.crossing(red, blue).dart)


def crossing_angles(rep: HolonomyRep, curves: CurveSystem) -> dict[int, float]:
    """Angle at every crossing, keyed by its dart."""
    return {c.dart: _crossing_angle(rep, curves, c.dart) for c in curves.crossings}


# --- differential --------------------------------------------------------------

@dataclass
class DifferentialReport:
    rows: list[int]
    columns: list[int]
    theta: float
    entries: np.ndarray
    incidence: list[list[int]]
    measured_entries: np.ndarray | None = None
    rank: int | None = None
    min_singular_value: float | None = None
    fd_max_residual: float | None = None
    blue_drift: float | None = None
    dim_W: Fraction | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.columns)

    @property
    def full_rank(self) -> bool:
        return self.rank == len(self.rows)


def wolpert_differential(curves: CurveSystem, theta: float,
                         angles: dict[int, float] | None = None) -> DifferentialReport:
    """Red-length derivatives along blue twists: one cosine per crossing."""
    rows, cols = list(curves.red), list(curves.blue)
    ri = {f: i for i, f in enumerate(rows)}
    ci = {e: j for j, e in enumerate(cols)}
    D = np.zeros((len(rows), len(cols)))
    inc = [[0] * len(cols) for _ in rows]
    for c in curves.crossings:
        i, j = ri[c.red], ci[c.blue]
        D[i, j] += math.cos(angles[c.dart] if angles is not None else theta)
        inc[i][j] += 1
    p, q = map_type(curves.surface_map)
    try:
        dim_W = cell_dimension(p, q, counts(curves.surface_map).genus_X)[0]
    except DomainError:
        dim_W = None
    return DifferentialReport(rows, cols, theta, D, inc, dim_W=dim_W)


def exact_rank(matrix) -> int:
    """Rank of an integer or rational matrix by fraction-free elimination."""
    A = [[Fraction(x) for x in row] for row in matrix]
    if not A:
        return 0
    den = 1
    for row in A:
        for x in row:
            den = den * x.denominator // math.gcd(den, x.denominator)
    A = [[int(x * den) for x in row] for row in A]
    m, n = len(A), len(A[0])
    rank, prev = 0, 1
    for col in range(n):
        piv = next((i for i in range(rank, m) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        for i in range(rank + 1, m):
            for j in range(col + 1, n):
                A[i][j] = (A[rank][col] * A[i][j] - A[i][col] * A[rank][j]) // prev
            A[i][col] = 0
        prev = A[rank][col]
        rank += 1
        if rank == m:
            break
    return rank


def numeric_rank(matrix, rtol: float = SVD_RTOL, atol: float = SVD_ATOL) -> tuple[int, float]:
    """SVD rank with a relative threshold, and the smallest singular value kept.

    Singular values below ``atol`` count as zero, so a table of rounding noise has rank 0.
    """
    sv = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] <= atol:
        return 0, 0.0
    kept = sv[sv > rtol * sv[0]]
    return int(kept.size), float(kept[-1])


def differential_rank(report: DifferentialReport, rtol: float = SVD_RTOL) -> int:
    """Rank certified twice: exactly on the normalized table and by singular values."""
    D = report.measured_entries if report.measured_entries is not None else report.entries
    c = math.cos(report.theta)
    if abs(c) < 1e-12:
        exact = 0
    else:
        table = D / c
        rounded = np.rint(table)
        if np.abs(table - rounded).max(initial=0.0) > 1e-6:
            raise RankCertificationError("normalized differential is not an integer table")
        exact = exact_rank(rounded.astype(int).tolist())
    num, smin = numeric_rank(D, rtol)
    if num != exact:
        raise RankCertificationError(f"exact rank {exact} != numeric rank {num}")
    report.rank, report.min_singular_value = exact, smin
    return exact


# --- finite differences --------------------------------------------------------

@dataclass
class FiniteDifference:
    blue: int
    step: float
    derivatives: np.ndarray       # per red curve
    expected: np.ndarray
    blue_drift: float             # largest change of any blue length
    tol: float = FD_TOL

    @property
    def residuals(self) -> np.ndarray:
        return np.abs(self.derivatives - self.expected)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max(initial=0.0))

    @property
    def warning(self) -> bool:
        return self.max_residual > self.tol


def _lengths(rep, curves, kind, ids):
    return np.array([curve_length(rep, curves, (kind, i)) for i in ids])


def finite_difference_check(rep: HolonomyRep, curves: CurveSystem, blue: int, step: float = FD_STEP,
                            angles: dict[int, float] | None = None) -> FiniteDifference:
    """Central difference of every red length along the twist about one blue curve."""
    if angles is None:
        angles = crossing_angles(rep, curves)
    expected = wolpert_differential(curves, 0.0, angles).entries[:, list(curves.blue).index(blue)]
    e = curves.surface_map.edges.index(curves.surface_map.edges[blue])
    out = []
    for sgn in (1, -1):
        tw = np.array(rep.twist, dtype=float)
        tw[e] += sgn * step
        out.append(rep.with_twist(tw))
    plus, minus = out
    red = list(curves.red)
    deriv = (_lengths(plus, curves, "red", red) - _lengths(minus, curves, "red", red)) / (2 * step)
    base_blue = _lengths(rep, curves, "blue", curves.blue)
    drift = max(float(np.abs(_lengths(r, curves, "blue", curves.blue) - base_blue).max()) for r in out)
    return FiniteDifference(blue, step, deriv, expected, drift)


def fd_convergence(rep: HolonomyRep, curves: CurveSystem, blue: int,
                   steps=(0.04, 0.02, 0.01)) -> list[float]:
    """Max residuals at decreasing steps; central differences shrink them fourfold per halving."""
    angles = crossing_angles(rep, curves)
    return [finite_difference_check(rep, curves, blue, h, angles).max_residual for h in steps]


def differential_report(rep: HolonomyRep, curves: CurveSystem, theta: float,
                        step: float = FD_STEP) -> DifferentialReport:
    """Formula differential with measured signs, its FD counterpart and its certified rank."""
    angles = crossing_angles(rep, curves)
    report = wolpert_differential(curves, theta, angles)
    cols = []
    worst = drift = 0.0
    for e in curves.blue:
        fd = finite_difference_check(rep, curves, e, step, angles)
        cols.append(fd.derivatives)
        worst = max(worst, fd.max_residual)
        drift = max(drift, fd.blue_drift)
    report.measured_entries = np.column_stack(cols) if cols else np.zeros(report.entries.shape)
    report.fd_max_residual = worst
    report.blue_drift = drift
    # rank of the formula table; the measured one must agree to within the FD tolerance
    formula = replace(report, measured_entries=None)
    report.rank = differential_rank(formula)
    report.min_singular_value = formula.min_singular_value
    return report


# --- xi probe ------------------------------------------------------------------

@dataclass
class XiProbe:
    vertex: int
    reds: list[int]                  # red curves around the vertex, first = closing corner
    values: list[float]              # derivative of each along xi
    coefficients: dict[int, int]     # blue curve -> coefficient in xi
    everywhere: dict[int, float] = field(default_factory=dict)   # all red curves


def xi_probe(curves: CurveSystem, vertex: int, theta: float) -> XiProbe:
    """Derivative of red lengths along the alternating sum of twists around a vertex.

    Around a vertex with darts ``d_0..d_{q-1}`` the twist ``xi`` puts
    coefficient ``(-1)^(j+1)`` on the blue curve of ``d_j``.  The red curve at
    the corner between ``d_{j-1}`` and ``d_j`` meets exactly those two blue
    curves, so its derivative cancels except at the corner closing the cycle.
    """
    m = curves.surface_map
    darts = m.vertices[vertex]
    q = len(darts)
    coeff: dict[int, int] = {}
    for j, d in enumerate(darts):
        e = m.edge_of[d]
        coeff[e] = coeff.get(e, 0) + (-1) ** (j + 1)
    D = wolpert_differential(curves, theta)
    ci = {e: j for j, e in enumerate(D.columns)}
    xi = np.zeros(len(D.columns))
    for e, c in coeff.items():
        if e in ci:
            xi[ci[e]] = c
    dl = D.entries @ xi
    everywhere = {f: float(v) for f, v in zip(D.rows, dl)}
    reds = [m.face_of[darts[j - 1]] for j in range(q)]
    return XiProbe(vertex, reds, [everywhere.get(f, 0.0) for f in reds], coeff, everywhere)


# --- choosing t ----------------------------------------------------------------

@dataclass
class Calibration:
    deformation: CalibratedDeformation
    systoles: SystoleReport
    curves: CurveSystem
    rep: HolonomyRep
    steps_tried: int


def select_t_star(m: SurfaceMap, tol: float = LENGTH_TOL, grid_step: float = 0.01, grid_size: int = 20,
                  workers: int = 1, margin_factor: float = 10.0) -> Calibration:
    """Smallest grid value above t0 whose calibrated surface keeps the curves as systoles."""
    p, q = map_type(m)
    t0 = solve_t0(p, q)
    expected = m.E + m.F
    for k in range(1, grid_size + 1):
        t = t0 + grid_step * k
        cal = calibrate_twist(p, q, t, t0=t0)
        curves, rep = build_surface(m, t, cal.r)
        rep_sys = systole_report(rep, curves, lmax=2 * t + 0.3, tol=tol, workers=workers)
        kinds = rep_sys.kinds()
        ok = (abs(rep_sys.systole_length - 2 * t) <= tol
              and kinds.get("blue", 0) + kinds.get("red", 0) == expected == rep_sys.multiplicity
              and rep_sys.margin > margin_factor * tol)
        if ok:
            return Calibration(replace(cal, margin=rep_sys.margin), rep_sys, curves, rep, k)
    raise DomainError(f"no t in (t0, t0 + {grid_step * grid_size}] keeps the curves as systoles")
