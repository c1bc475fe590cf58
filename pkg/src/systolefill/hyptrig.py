"""Trigonometry of the right-angled 2q-gon with alternating side lengths t, s.

Sides of the embedded polygon are numbered 0..2q-1 counter-clockwise; even
sides are blue (length t), odd sides are red (length s).  Side ``j`` runs from
vertex ``j`` to vertex ``j + 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import plane
from .plane import Isometry


class DomainError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


BLUE, RED = "blue", "red"


def _check(q: int, t: float) -> None:
    if int(q) != q or q < 3:
        raise DomainError(f"q must be an integer >= 3, got {q!r}")
    if not t > 0:
        raise DomainError(f"t must be positive, got {t!r}")


def red_side_length(q: int, t: float) -> float:
    """Length s of the red sides, from cos(pi/q) = sinh(t/2) sinh(s/2)."""
    _check(q, t)
    return 2 * math.asinh(math.cos(math.pi / q) / math.sinh(t / 2))


def symmetric_length(q: int) -> float:
    """The t at which red and blue sides have equal length."""
    return 2 * math.asinh(math.sqrt(math.cos(math.pi / q)))


def balance_residual(p: int, q: int, t: float) -> float:
    """p s(t) - 2t, strictly decreasing in t."""
    return p * red_side_length(q, t) - 2 * t


def solve_t0(p: int, q: int, tol: float = 1e-12, bracket: tuple[float, float] | None = None,
             max_iter: int = 400) -> float:
    """Bisect for the t0 at which the red boundary length p s(t0) equals 2 t0."""
    if int(p) != p or p < 3:
        raise DomainError(f"p must be an integer >= 3, got {p!r}")
    _check(q, 1.0)
    if not tol > 0:
        raise DomainError("tol must be positive")
    lo, hi = bracket if bracket is not None else (1e-3, 1.0)
    if not 0 < lo < hi:
        raise DomainError(f"invalid bracket {bracket!r}")
    while balance_residual(p, q, lo) <= 0:
        lo /= 2
        if lo < 1e-300:
            raise ConvergenceError("could not bracket t0 from below")
    while balance_residual(p, q, hi) >= 0:
        hi *= 2
        if hi > 1e6:
            raise ConvergenceError("could not bracket t0 from above")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f = balance_residual(p, q, mid)
        if f == 0 or mid in (lo, hi):
            break
        if f > 0:
            lo = mid
        else:
            hi = mid
    else:
        raise ConvergenceError("bisection did not terminate")
    best = min((lo, hi, 0.5 * (lo + hi)), key=lambda x: abs(balance_residual(p, q, x)))
    if abs(balance_residual(p, q, best)) > tol:
        raise ConvergenceError(
            f"residual {balance_residual(p, q, best):.3e} above tolerance {tol:.1e}")
    return best


@dataclass(frozen=True)
class PolygonSpec:
    q: int
    t: float
    s: float

    @property
    def area(self) -> float:
        return math.pi * (self.q - 2)

    @classmethod
    def of(cls, q: int, t: float) -> "PolygonSpec":
        return cls(q, t, red_side_length(q, t))


@dataclass(frozen=True)
class PolygonEmbedding:
    spec: PolygonSpec
    vertices: np.ndarray            # (2q, 3) points on the hyperboloid
    side_lines: np.ndarray          # (2q, 3) unit normals, side j oriented v_j -> v_{j+1}
    circumradius: float
    model: str = plane.MODEL
    center: np.ndarray = field(default_factory=lambda: plane.ORIGIN.copy())

    @property
    def q(self) -> int:
        return self.spec.q

    @property
    def side_colors(self) -> list[str]:
        return [BLUE if j % 2 == 0 else RED for j in range(2 * self.q)]

    @property
    def rotation(self) -> Isometry:
        """Order-q rotation about the center, shifting vertex labels by +2."""
        return Isometry(plane.rotation(self.center, 2 * math.pi / self.q))

    def side_length(self, j: int) -> float:
        n = 2 * self.q
        return plane.distance(self.vertices[j % n], self.vertices[(j + 1) % n])

    def interior_angle(self, i: int) -> float:
        n = 2 * self.q
        x = self.vertices[i % n]
        u = plane.line_tangent(plane.line_through(x, self.vertices[(i + 1) % n]), x)
        v = plane.line_tangent(plane.line_through(x, self.vertices[(i - 1) % n]), x)
        # orient tangents toward the neighbouring vertices
        if plane.inner(self.vertices[(i + 1) % n], u) > 0:
            u = -u
        if plane.inner(self.vertices[(i - 1) % n], v) > 0:
            v = -v
        return plane.ccw_angle(x, u, v)

    def side_midpoint(self, j: int) -> np.ndarray:
        n = 2 * self.q
        return plane.normalize_point(self.vertices[j % n] + self.vertices[(j + 1) % n])

    def area(self) -> float:
        """Area from the angle defect."""
        n = 2 * self.q
        return (n - 2) * math.pi - sum(self.interior_angle(i) for i in range(n))


def embed_polygon(q: int, t: float) -> PolygonEmbedding:
    """Right-angled 2q-gon centred at the origin with blue side 0 bisected by angle 0.

    Built from q reflected copies of the quadrilateral with angle pi/q at the
    center; the center-to-corner triangles give sinh(t/2) = sinh(R) sin(a_b)
    and sinh(s/2) = sinh(R) sin(a_r) with a_b + a_r = pi/q.
    """
    spec = PolygonSpec.of(q, t)
    k = math.sinh(t / 2) / math.sinh(spec.s / 2)
    half = math.pi / q
    a_blue = math.atan2(k * math.sin(half), 1 + k * math.cos(half))
    R = math.asinh(math.sinh(t / 2) / math.sin(a_blue))
    angles = []
    for i in range(q):
        c = 2 * math.pi * i / q
        angles += [c - a_blue, c + a_blue]
    verts = np.array([plane.polar_point(R, a) for a in angles])
    n = 2 * q
    lines = []
    for j in range(n):
        a, b = verts[j], verts[(j + 1) % n]
        nj = plane.line_through(a, b)
        lines.append(nj)
    return PolygonEmbedding(spec, verts, np.array(lines), R)


def _shares_vertex(n: int, i: int, j: int) -> bool:
    return (i - j) % n in (1, n - 1)


def side_distance(emb: PolygonEmbedding, i: int, j: int) -> float:
    """Distance between the complete geodesics carrying two disjoint sides."""
    n = 2 * emb.q
    i, j = i % n, j % n
    if i == j:
        raise DomainError("sides must be distinct")
    if _shares_vertex(n, i, j):
        raise DomainError(f"sides {i} and {j} share a vertex")
    return plane.line_distance(emb.side_lines[i], emb.side_lines[j])
