"""Assembly of X(t, M) as 2V copies of the right-angled polygon.

Tile ``2v + sheet`` is the copy of the polygon at map vertex ``v`` on sheet 0
(the bordered surface B(t, M)) or sheet 1 (its mirror image).  Crossing side
``j`` of tile ``T`` lands on side ``neighbor_side[T, j]`` of tile
``neighbor[T, j]``, and if a tile is developed as ``g(P)`` its neighbour is
developed as ``(g @ pairing[T, j])(P)``.

Blue side ``2k`` of vertex ``v`` carries the dart at position ``k`` of the
rotation of ``v``; red side ``2k + 1`` is the corner between darts ``k`` and
``k + 1``.  Red sides are mirror seams between the two sheets.  Blue sides are
glued by a half-turn about their midpoint, post-composed with a translation
along the side that realises the twist.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import plane
from .hyptrig import PolygonEmbedding, embed_polygon
from .maps import SurfaceMap, map_type, validate
from .plane import Isometry

CORNER_TOL = 1e-9

# Sign relating the stored twist to a translation along the side's line.  With
# this choice a positive twist is a left twist: the counter-clockwise angle from
# a red curve to each blue curve it meets is acute.
TWIST_SIGN = 1.0


class AssemblyError(RuntimeError):
    pass


def tile_of(vertex: int, sheet: int) -> int:
    return 2 * vertex + sheet


@dataclass(frozen=True)
class Crossing:
    dart: int
    red: int
    blue: int
    red_position: int     # index of the crossing along the red curve
    blue_position: int    # 0 at the even dart of the edge, 1 at the odd one


@dataclass(frozen=True)
class VertexStar:
    """Blue curves beta_j and red curves alpha_j around a map vertex.

    ``red[j]`` meets exactly ``blue[j - 1]`` and ``blue[j]`` (indices mod q).
    """
    vertex: int
    blue: tuple[int, ...]
    red: tuple[int, ...]


@dataclass(frozen=True)
class CurveSystem:
    """Blue (edge) and red (face) curves of X(t, M) and their crossings."""

    surface_map: SurfaceMap
    blue: tuple[int, ...] = None
    red: tuple[int, ...] = None

    def __post_init__(self):
        m = self.surface_map
        if self.blue is None:
            object.__setattr__(self, "blue", tuple(range(m.E)))
        if self.red is None:
            object.__setattr__(self, "red", tuple(range(m.F)))

    @property
    def p(self) -> int:
        return map_type(self.surface_map)[0]

    @property
    def q(self) -> int:
        return map_type(self.surface_map)[1]

    def subsystem(self, blue=None, red=None) -> "CurveSystem":
        return CurveSystem(self.surface_map,
                           tuple(self.blue if blue is None else blue),
                           tuple(self.red if red is None else red))

    @cached_property
    def crossings(self) -> list[Crossing]:
        m = self.surface_map
        blue, red = set(self.blue), set(self.red)
        out = []
        for f in sorted(red):
            for i, d in enumerate(m.faces[f]):
                e = m.edge_of[d]
                if e in blue:
                    out.append(Crossing(d, f, e, i, 0 if d == m.edges[e][0] else 1))
        return out

    def incident(self, red: int, blue: int) -> bool:
        return any(c.red == red and c.blue == blue for c in self.crossings)

    def crossing(self, red: int, blue: int) -> Crossing:
        for c in self.crossings:
            if c.red == red and c.blue == blue:
                return c
        raise ValueError(f"red {red} and blue {blue} do not cross")

    def red_points(self, f: int) -> list[int]:
        """Darts labelling the crossings along red curve ``f``, in order."""
        blue = set(self.blue)
        return [d for d in self.surface_map.faces[f] if self.surface_map.edge_of[d] in blue]

    def blue_points(self, e: int) -> list[int]:
        red = set(self.red)
        return [d for d in self.surface_map.edges[e] if self.surface_map.face_of[d] in red]

    @cached_property
    def vertex_stars(self) -> list[VertexStar]:
        m = self.surface_map
        stars = []
        for v, cyc in enumerate(m.vertices):
            q = len(cyc)
            stars.append(VertexStar(v, tuple(m.edge_of[d] for d in cyc),
                                    tuple(m.face_of[cyc[j - 1]] for j in range(q))))
        return stars

    def incidence_matrix(self) -> list[list[int]]:
        """0/1 table with rows indexed by ``self.red`` and columns by ``self.blue``."""
        col = {e: j for j, e in enumerate(self.blue)}
        row = {f: i for i, f in enumerate(self.red)}
        table = [[0] * len(self.blue) for _ in self.red]
        for c in self.crossings:
            table[row[c.red]][col[c.blue]] += 1
        return table

    # -- crossing words ------------------------------------------------------

    def blue_word(self, e: int) -> list[tuple[int, int]]:
        """Loop in the tiles of one endpoint, crossing the two red seams beside the edge."""
        m = self.surface_map
        d = m.edges[e][0]
        v, k, q = m.vertex_of[d], m.position_of[d], len(m.vertices[m.vertex_of[d]])
        return [(tile_of(v, 0), 2 * k + 1), (tile_of(v, 1), (2 * k - 1) % (2 * q))]

    def red_word(self, f: int, start: int | None = None) -> list[tuple[int, int]]:
        """Loop around face ``f`` on sheet 0, crossing its p blue walls.

        ``start`` is the dart of the face cycle whose corner the loop leaves from.
        """
        m = self.surface_map
        cyc = m.faces[f]
        if start is not None:
            i = cyc.index(start)
            cyc = cyc[i:] + cyc[:i]
        word = []
        for d in cyc:
            nxt = m.vertex_rotation[d]
            word.append((tile_of(m.vertex_of[d], 0), 2 * m.position_of[nxt]))
        return word

    def word(self, curve: tuple[str, int]) -> list[tuple[int, int]]:
        kind, idx = curve
        if kind == "blue":
            return self.blue_word(idx)
        if kind == "red":
            return self.red_word(idx)
        raise KeyError(f"unknown curve {curve!r}")


@dataclass
class HolonomyRep:
    """Pairing isometries of a polygon complex; lengths and angles are read from it."""

    polygon: PolygonEmbedding
    neighbor: np.ndarray          # (tiles, sides) int, -1 on boundary sides
    neighbor_side: np.ndarray     # (tiles, sides) int
    pairing: np.ndarray           # (tiles, sides, 2, 2)
    t: float
    twist: np.ndarray             # per blue curve
    surface_map: SurfaceMap | None = None
    base_tile: int = 0
    corner_residual: float = 0.0
    _lorentz_inv: np.ndarray | None = field(default=None, repr=False)

    @property
    def tiles(self) -> int:
        return self.neighbor.shape[0]

    @property
    def sides(self) -> int:
        return self.neighbor.shape[1]

    @property
    def q(self) -> int:
        return self.polygon.q

    @property
    def area(self) -> float:
        return self.tiles * self.polygon.area()

    def crosses(self, tile: int, side: int) -> bool:
        return self.neighbor[tile, side] >= 0

    def word_matrix(self, word) -> np.ndarray:
        g = np.eye(2)
        expected = None
        for tile, side in word:
            if expected is not None and tile != expected:
                raise ValueError(f"word is not contiguous at tile {tile} (expected {expected})")
            if not self.crosses(tile, side):
                raise ValueError(f"side {side} of tile {tile} is a boundary side")
            g = g @ self.pairing[tile, side]
            expected = int(self.neighbor[tile, side])
        if word and expected != word[0][0]:
            raise ValueError("word does not close up")
        return g

    def word_element(self, word) -> Isometry:
        return Isometry(self.word_matrix(word))

    def lorentz_inverse_pairings(self) -> np.ndarray:
        """3x3 matrices taking a tile's chart to the chart of its neighbour."""
        if self._lorentz_inv is None:
            out = np.zeros((self.tiles, self.sides, 3, 3))
            for T in range(self.tiles):
                for j in range(self.sides):
                    if self.crosses(T, j):
                        out[T, j] = plane.lorentz_matrix(np.linalg.inv(self.pairing[T, j]))
            self._lorentz_inv = out
        return self._lorentz_inv

    def with_twist(self, twist) -> "HolonomyRep":
        if self.surface_map is None:
            raise ValueError("only surfaces built from a map can be re-twisted")
        return _assemble(self.surface_map, self.t, twist, self.polygon)


def rotate_word(word, k: int):
    """Cyclic rotation of a closed crossing word (a conjugate based at another tile)."""
    k %= max(1, len(word))
    return list(word[k:]) + list(word[:k])


def _corresponding_vertex(i: int, j: int, j2: int, mirror: bool, n: int) -> int:
    if mirror:
        return i
    return (j2 + 1) % n if i == j else j2


def corner_cycles(rep: HolonomyRep) -> list[tuple[list[tuple[int, int]], float]]:
    """Every cycle of tiles around a polygon vertex with its closing residual."""
    n = rep.sides
    seen = set()
    out = []
    for T0 in range(rep.tiles):
        for i0 in range(n):
            if (T0, i0) in seen:
                continue
            word, T, i, side = [], T0, i0, i0
            g = np.eye(2)
            closed = True
            while True:
                seen.add((T, i))
                if not rep.crosses(T, side):
                    closed = False
                    break
                word.append((T, side))
                g = g @ rep.pairing[T, side]
                T2, s2 = int(rep.neighbor[T, side]), int(rep.neighbor_side[T, side])
                i2 = _corresponding_vertex(i, side, s2, _is_mirror(rep, T, side), n)
                other = (i2 - 1) % n if s2 == i2 else i2
                T, i, side = T2, i2, other
                if (T, i) == (T0, i0) and side == i0:
                    break
                if len(word) > 4 * rep.tiles * n:
                    raise AssemblyError("corner walk does not close")
            if closed:
                out.append((word, plane.same_up_to_sign(g, np.eye(2))))
    return out


def _is_mirror(rep: HolonomyRep, T: int, side: int) -> bool:
    return np.linalg.det(rep.pairing[T, side]) < 0


def _side_maps(poly: PolygonEmbedding):
    q = poly.q
    rot = plane.rotation(poly.center, 2 * math.pi / q)
    rot_pow = [np.eye(2)]
    for _ in range(q - 1):
        rot_pow.append(rot_pow[-1] @ rot)
    halves = [plane.half_turn(poly.side_midpoint(2 * k)) for k in range(q)]
    reflections = [plane.reflection(poly.side_lines[j]) for j in range(2 * q)]
    return rot_pow, halves, reflections


def _assemble(m: SurfaceMap, t: float, twist, poly: PolygonEmbedding | None = None) -> HolonomyRep:
    p, q = map_type(m)
    poly = poly or embed_polygon(q, t)
    twist = np.broadcast_to(np.asarray(twist, dtype=float), (m.E,)).copy()
    rot_pow, halves, refl = _side_maps(poly)
    n = 2 * q
    tiles = 2 * m.V
    nb = np.full((tiles, n), -1, dtype=int)
    nbs = np.full((tiles, n), -1, dtype=int)
    pair = np.zeros((tiles, n, 2, 2))
    for v, cyc in enumerate(m.vertices):
        for sheet in (0, 1):
            T = tile_of(v, sheet)
            sign = 1.0 if sheet == 0 else -1.0
            for k, d in enumerate(cyc):
                j = 2 * k + 1
                nb[T, j], nbs[T, j] = tile_of(v, 1 - sheet), j
                pair[T, j] = refl[j]
                d2 = m.edge_involution[d]
                w, k2 = m.vertex_of[d2], m.position_of[d2]
                r = twist[m.edge_of[d]]
                shift = plane.translation(poly.side_lines[2 * k], TWIST_SIGN * sign * r)
                nb[T, 2 * k], nbs[T, 2 * k] = tile_of(w, sheet), 2 * k2
                pair[T, 2 * k] = shift @ halves[k] @ rot_pow[(k - k2) % q]
    rep = HolonomyRep(poly, nb, nbs, pair, t, twist, m)
    _check_pairings(rep)
    worst = max(res for _, res in corner_cycles(rep))
    if worst > CORNER_TOL:
        raise AssemblyError(f"corner cycle residual {worst:.3e} exceeds {CORNER_TOL:.0e}")
    rep.corner_residual = worst
    return rep


def _check_pairings(rep: HolonomyRep) -> None:
    for T in range(rep.tiles):
        for j in range(rep.sides):
            if not rep.crosses(T, j):
                continue
            T2, j2 = rep.neighbor[T, j], rep.neighbor_side[T, j]
            if rep.neighbor[T2, j2] != T or rep.neighbor_side[T2, j2] != j:
                raise AssemblyError(f"side {j} of tile {T} is not glued symmetrically")
            res = plane.same_up_to_sign(rep.pairing[T, j] @ rep.pairing[T2, j2], np.eye(2))
            if res > CORNER_TOL:
                raise AssemblyError(f"pairing of side {j} of tile {T} is not inverse to its partner ({res:.2e})")


def build_surface(m: SurfaceMap, t: float, r=0.0) -> tuple[CurveSystem, HolonomyRep]:
    """Glue 2V polygons along the map; ``r`` is a uniform twist or one per edge."""
    p, q = map_type(m)
    report = validate(m, p, q)
    if not report:
        raise AssemblyError("invalid map: " + "; ".join(report.reasons))
    return CurveSystem(m), _assemble(m, t, r)


def build_block(q: int, t: float) -> HolonomyRep:
    """The sphere with q holes obtained by doubling the polygon across its red sides."""
    poly = embed_polygon(q, t)
    _, _, refl = _side_maps(poly)
    n = 2 * q
    nb = np.full((2, n), -1, dtype=int)
    nbs = np.full((2, n), -1, dtype=int)
    pair = np.zeros((2, n, 2, 2))
    for sheet in (0, 1):
        for j in range(1, n, 2):
            nb[sheet, j], nbs[sheet, j] = 1 - sheet, j
            pair[sheet, j] = refl[j]
    return HolonomyRep(poly, nb, nbs, pair, t, np.zeros(q))


def curve_holonomy(rep: HolonomyRep, curves: CurveSystem, curve: tuple[str, int]) -> Isometry:
    return rep.word_element(curves.word(curve))


def curve_length(rep: HolonomyRep, curves: CurveSystem, curve: tuple[str, int]) -> float:
    return plane.translation_length(float(np.trace(rep.word_matrix(curves.word(curve)))))
