"""Hyperbolic plane primitives.

Points and geodesics live on the hyperboloid ``x0^2 - x1^2 - x2^2 = 1`` in
Minkowski space; isometries are real 2x2 matrices with determinant +1
(orientation preserving) or -1 (orientation reversing).  The two pictures are
tied together by sending a Minkowski vector ``x`` to the symmetric matrix

    S(x) = [[x0 + x1, x2], [x2, x0 - x1]],      det S(x) = <x, x>,

on which a matrix ``g`` acts by ``S -> g S g^T / |det g|``.

A geodesic is stored as its unit spacelike normal ``n`` (``<n, n> = -1``);
a point ``x`` lies on it iff ``<x, n> = 0``, and ``<x, n>`` is the signed
``sinh`` of the distance from ``x`` to the line.  "Counter-clockwise" always
means increasing polar angle in the ``(x1, x2)`` plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MODEL = "hyperboloid/SL2R"

_G = np.diag([1.0, -1.0, -1.0])
_J = np.array([[0.0, 1.0], [-1.0, 0.0]])
ORIGIN = np.array([1.0, 0.0, 0.0])


def inner(a, b) -> float:
    return float(a[0] * b[0] - a[1] * b[1] - a[2] * b[2])


def lorentz_cross(a, b) -> np.ndarray:
    """Vector Minkowski-orthogonal to both ``a`` and ``b``."""
    return _G @ np.cross(a, b)


def sym(x) -> np.ndarray:
    return np.array([[x[0] + x[1], x[2]], [x[2], x[0] - x[1]]])


def unsym(S) -> np.ndarray:
    return np.array([(S[0, 0] + S[1, 1]) / 2, (S[0, 0] - S[1, 1]) / 2, (S[0, 1] + S[1, 0]) / 2])


def polar_point(radius: float, angle: float) -> np.ndarray:
    sh = math.sinh(radius)
    return np.array([math.cosh(radius), sh * math.cos(angle), sh * math.sin(angle)])


def normalize_line(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    nn = inner(n, n)
    if nn >= 0:
        raise ValueError("not a spacelike vector")
    return n / math.sqrt(-nn)


def normalize_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    nn = inner(x, x)
    if nn <= 0:
        raise ValueError("not a timelike vector")
    x = x / math.sqrt(nn)
    return x if x[0] > 0 else -x


def distance(a, b) -> float:
    return math.acosh(max(1.0, inner(a, b)))


def line_through(a, b) -> np.ndarray:
    return normalize_line(lorentz_cross(a, b))


def line_distance(n1, n2) -> float:
    """Distance between two disjoint geodesics (0 if they meet)."""
    c = abs(inner(n1, n2))
    return math.acosh(c) if c > 1.0 else 0.0


def line_intersection(n1, n2) -> np.ndarray | None:
    if abs(inner(n1, n2)) >= 1.0:
        return None
    return normalize_point(lorentz_cross(n1, n2))


def line_tangent(n, x) -> np.ndarray:
    """Unit tangent to the geodesic ``n`` at its point ``x``."""
    u = lorentz_cross(x, n)
    return u / math.sqrt(-inner(u, u))


def ccw_angle(x, u, v) -> float:
    """Counter-clockwise angle in ``[0, 2pi)`` from tangent ``u`` to ``v`` at ``x``."""
    c = -inner(u, v)
    s = float(np.linalg.det(np.array([x, u, v])))
    return math.atan2(s, c) % (2 * math.pi)


# --- isometries as 2x2 matrices ---------------------------------------------

def act(g, x) -> np.ndarray:
    """Image of the Minkowski vector ``x`` under ``g``."""
    return unsym(g @ sym(x) @ g.T) / abs(g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0])


def lorentz_matrix(g) -> np.ndarray:
    """3x3 matrix of the linear action of ``g`` on Minkowski space."""
    return np.column_stack([act(g, e) for e in np.eye(3)])


def reflection(n) -> np.ndarray:
    return sym(n) @ _J


def translation(n, x: float) -> np.ndarray:
    """Translate by ``x`` along the line ``n``; the sign of ``n`` fixes the direction."""
    return math.cosh(x / 2) * np.eye(2) + math.sinh(x / 2) * (sym(n) @ _J)


def rotation(p, angle: float) -> np.ndarray:
    """Counter-clockwise rotation by ``angle`` about the point ``p``."""
    return math.cos(angle / 2) * np.eye(2) - math.sin(angle / 2) * (sym(p) @ _J)


def half_turn(p) -> np.ndarray:
    return sym(p) @ _J


def axis(g) -> np.ndarray:
    """Unit normal of the axis of a hyperbolic ``g``, oriented by its translation."""
    g = np.asarray(g, dtype=float)
    tr = g[0, 0] + g[1, 1]
    if tr < 0:
        g, tr = -g, -tr
    if tr <= 2:
        raise ValueError("element is not hyperbolic")
    sh = math.sqrt((tr / 2) ** 2 - 1)
    K = (g - (tr / 2) * np.eye(2)) @ _J.T / sh
    return normalize_line(unsym(K))


def same_up_to_sign(g, h) -> float:
    """Max-norm distance between ``g`` and ``+-h`` (the better sign)."""
    return float(min(np.abs(g - h).max(), np.abs(g + h).max()))


def translation_length(trace: float) -> float:
    return 2 * math.acosh(max(1.0, abs(trace) / 2))


@dataclass(frozen=True)
class Isometry:
    """A plane isometry with its trace-derived classification."""

    matrix: np.ndarray
    tol: float = 1e-9

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("isometry must be a 2x2 matrix")
        if abs(abs(np.linalg.det(m)) - 1) > 1e-8:
            raise ValueError(f"|det| = {abs(np.linalg.det(m))!r}, expected 1")
        object.__setattr__(self, "matrix", m)

    @property
    def det(self) -> float:
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def kind(self) -> str:
        if self.det < 0:
            return "reflection" if abs(self.trace) <= self.tol else "glide"
        a = abs(self.trace)
        if a > 2 + self.tol:
            return "hyperbolic"
        if a < 2 - self.tol:
            return "elliptic"
        return "parabolic"

    @property
    def translation_length(self) -> float:
        if self.kind != "hyperbolic":
            return 0.0
        return translation_length(self.trace)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix, self.tol)

    def inverse(self) -> "Isometry":
        m = self.matrix
        return Isometry(np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / self.det, self.tol)

    def __call__(self, x) -> np.ndarray:
        return act(self.matrix, x)
