"""Closed geodesics of a polygon complex by bounded search in the developed tiling.

Every closed geodesic of length <= Lmax passes through some tile T, and the
lift of its axis through the base copy of T belongs to a loop ``g`` based at T
that moves the tile center by at most ``Lmax + 2R`` (R the circumradius).  For
each tile we develop the tiling out to that radius, keep the loops whose axis
meets the base polygon, and glue the resulting (tile, axis) lifts into closed
geodesics by following each axis across the sides it meets.
"""
from __future__ import annotations

import itertools
import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import plane
from .assembly import CurveSystem, HolonomyRep, tile_of
from .hyptrig import DomainError, embed_polygon, side_distance
from .maps import counts

log = logging.getLogger(__name__)

LENGTH_TOL = 1e-8
LINE_TOL = 1e-9
MAX_TILES = 2_000_000


class SearchLimitError(RuntimeError):
    """The developed tiling outgrew the configured ceiling."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial if partial is not None else []
        self.partial_results = True


@dataclass
class GeodesicClass:
    crossing_word: tuple[tuple[int, int], ...]
    length: float
    trace: float
    kind: str = "other"            # "blue", "red" or "other"
    curve: int | None = None
    shadow: tuple[int, ...] = ()   # cyclically reduced dart walk in the map
    lifts: int = 0                 # (tile, axis) pairs met by the search

    @property
    def contractible_shadow(self) -> bool:
        return not self.shadow

    def summary(self) -> dict:
        return {"kind": self.kind, "curve": self.curve, "length": self.length,
                "word_length": len(self.crossing_word), "shadow_length": len(self.shadow)}


@dataclass
class SystoleReport:
    systole_length: float
    systoles: list[GeodesicClass]
    next_length: float
    search_bound: float
    classes: list[GeodesicClass] = field(default_factory=list, repr=False)

    @property
    def margin(self) -> float:
        return self.next_length - self.systole_length

    @property
    def multiplicity(self) -> int:
        return len(self.systoles)

    def kinds(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.systoles:
            out[c.kind] = out.get(c.kind, 0) + 1
        return out


# --- spatial keys --------------------------------------------------------------

class _PointSet:
    """Points bucketed on a grid of cell size ``eps``; lookups probe every cell within ``eps``."""

    def __init__(self, eps: float):
        self.eps = eps
        self.cells: dict = {}

    def _cell(self, x):
        return tuple(math.floor(c / self.eps) for c in x)

    def get(self, x):
        eps = self.eps
        ranges = [sorted({math.floor((c - eps) / eps), math.floor((c + eps) / eps)}) for c in x]
        for key in itertools.product(*(range(r[0], r[-1] + 1) for r in ranges)):
            for y, value in self.cells.get(key, ()):
                if max(abs(a - b) for a, b in zip(x, y)) <= eps:
                    return value
        return None

    def add(self, x, value) -> None:
        self.cells.setdefault(self._cell(x), []).append((tuple(x), value))


def _line_lookup(table: _PointSet, n):
    hit = table.get(n)
    return hit if hit is not None else table.get(-n)


# --- search --------------------------------------------------------------------

@dataclass
class _Lift:
    tile: int
    line: np.ndarray
    length: float
    trace: float
    word: list


def _word_from(parents, via, labels, idx):
    word = []
    while parents[idx] >= 0:
        par = parents[idx]
        word.append((labels[par], via[idx]))
        idx = par
    return word[::-1]


def _meets_polygon(verts, n, tol=LINE_TOL):
    s = verts @ (np.array([1.0, -1.0, -1.0]) * n)
    return s.min() <= tol and s.max() >= -tol


def _search_tile(rep: HolonomyRep, T: int, lmax: float, max_tiles: int):
    R = rep.polygon.circumradius
    loop_bound = math.cosh(lmax + 2 * R + 1e-6)
    # twisted sides meet their neighbours off-corner by up to the largest twist
    slide = float(np.abs(rep.twist).max(initial=0.0))
    grow_bound = math.cosh(lmax + 3 * R + slide + 1e-6)
    verts = rep.polygon.vertices
    pair, nb = rep.pairing, rep.neighbor

    mats = [np.eye(2)]
    labels = [T]
    parents = [-1]
    via = [-1]
    seen = _PointSet(1e-4)
    seen.add((0.0, 0.0), 0)
    frontier = np.array([0])
    loops = []
    while frontier.size:
        G = np.array([mats[i] for i in frontier])
        lab = np.array([labels[i] for i in frontier])
        new_front = []
        for j in range(rep.sides):
            ok = nb[lab, j] >= 0
            if not ok.any():
                continue
            src = frontier[ok]
            H = np.einsum("nij,njk->nik", G[ok], pair[lab[ok], j])
            nlab = nb[lab[ok], j]
            x0 = 0.5 * (H ** 2).sum(axis=(1, 2))
            x1 = 0.5 * (H[:, 0, 0] ** 2 + H[:, 0, 1] ** 2 - H[:, 1, 0] ** 2 - H[:, 1, 1] ** 2)
            x2 = H[:, 0, 0] * H[:, 1, 0] + H[:, 0, 1] * H[:, 1, 1]
            for a in np.nonzero(x0 <= grow_bound)[0]:
                key = (float(x1[a]), float(x2[a]))
                if seen.get(key) is not None:
                    continue
                idx = len(mats)
                seen.add(key, idx)
                mats.append(H[a])
                labels.append(int(nlab[a]))
                parents.append(int(src[a]))
                via.append(j)
                new_front.append(idx)
                if nlab[a] == T and x0[a] <= loop_bound:
                    loops.append(idx)
        if len(mats) > max_tiles:
            raise SearchLimitError(f"tile {T}: developed {len(mats)} tiles (limit {max_tiles})")
        frontier = np.array(new_front, dtype=int)

    lifts: dict = {}
    table = _PointSet(1e-6)
    for idx in loops:
        g = mats[idx]
        tr = float(g[0, 0] + g[1, 1])
        if abs(tr) <= 2 + 1e-9:
            continue
        length = plane.translation_length(tr)
        if length > lmax + LENGTH_TOL:
            continue
        n = plane.axis(g)
        if not _meets_polygon(verts, n):
            continue
        key = _line_lookup(table, n)
        if key is None:
            key = len(lifts)
            table.add(tuple(n), key)
            table.add(tuple(-n), key)
            lifts[key] = _Lift(T, n, length, tr, _word_from(parents, via, labels, idx))
        else:
            old = lifts[key]
            word = _word_from(parents, via, labels, idx)
            if length < old.length - LENGTH_TOL or (abs(length - old.length) <= LENGTH_TOL
                                                     and len(word) < len(old.word)):
                lifts[key] = _Lift(T, old.line, length, tr, word)
    log.debug("tile %d: %d developed tiles, %d loops, %d lifts", T, len(mats), len(loops), len(lifts))
    return [lifts[k] for k in sorted(lifts)]


def _search_tile_job(args):
    return _search_tile(*args)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            self.parent[max(a, b)] = min(a, b)


def _reduce_word(rep: HolonomyRep, word):
    out = []
    for c in word:
        if out and (rep.neighbor[out[-1]], rep.neighbor_side[out[-1]]) == c:
            out.pop()
        else:
            out.append(c)
    while len(out) >= 2 and (rep.neighbor[out[-1]], rep.neighbor_side[out[-1]]) == out[0]:
        out = out[1:-1]
    return [(int(a), int(b)) for a, b in out]


def canonical_word(rep: HolonomyRep, word) -> tuple:
    """Least rotation of the word or of its reverse."""
    word = _reduce_word(rep, word)
    if not word:
        return ()
    rev = [(int(rep.neighbor[a, b]), int(rep.neighbor_side[a, b])) for a, b in reversed(word)]
    cands = []
    for w in (word, rev):
        for k in range(len(w)):
            cands.append(tuple(w[k:] + w[:k]))
    return min(cands)


def shadow(rep: HolonomyRep, word) -> tuple[int, ...]:
    """Cyclically reduced walk of darts traced in the map by a crossing word."""
    m = rep.surface_map
    if m is None:
        return ()
    out: list[int] = []
    for tile, side in word:
        if side % 2:
            continue
        d = m.vertices[tile // 2][side // 2]
        if out and m.edge_involution[out[-1]] == d:
            out.pop()
        else:
            out.append(d)
    while len(out) >= 2 and m.edge_involution[out[-1]] == out[0]:
        out = out[1:-1]
    return tuple(out)


def known_curve_lines(rep: HolonomyRep, curves: CurveSystem | None = None) -> dict:
    """(tile, axis) of lifts of the blue and red curves that meet the base polygon."""
    poly = rep.polygon
    out = {}
    if curves is None:
        for k in range(rep.q):
            out[("blue", k)] = [(0, poly.side_lines[2 * k])]
        return out
    m = curves.surface_map
    for e in curves.blue:
        d = m.edges[e][0]
        out[("blue", e)] = [(tile_of(m.vertex_of[d], 0), poly.side_lines[2 * m.position_of[d]])]
    for f in curves.red:
        lines = []
        for d in m.faces[f]:
            g = rep.word_matrix(curves.red_word(f, start=d))
            n = plane.axis(g)
            if _meets_polygon(poly.vertices, n):
                lines.append((tile_of(m.vertex_of[d], 0), n))
        out[("red", f)] = lines
    return out


def enumerate_closed_geodesics(rep: HolonomyRep, lmax: float, curves: CurveSystem | None = None,
                               workers: int = 1, max_tiles: int = MAX_TILES) -> list[GeodesicClass]:
    """All primitive unoriented closed geodesics of length <= lmax, sorted by length."""
    if not lmax > 0:
        raise DomainError("lmax must be positive")
    jobs = [(rep, T, lmax, max_tiles) for T in range(rep.tiles)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_tile = list(pool.map(_search_tile_job, jobs))
    else:
        per_tile = [_search_tile_job(j) for j in jobs]

    items: list[_Lift] = []
    tables = []
    for lifts in per_tile:
        table = _PointSet(1e-6)
        for lift in lifts:
            table.add(tuple(lift.line), len(items))
            table.add(tuple(-lift.line), len(items))
            items.append(lift)
        tables.append(table)

    uf = _UnionFind(len(items))
    Linv = rep.lorentz_inverse_pairings()
    verts = rep.polygon.vertices
    G = np.array([1.0, -1.0, -1.0])
    dangling = 0
    for i, lift in enumerate(items):
        s = verts @ (G * lift.line)
        for j in range(rep.sides):
            a, b = s[j], s[(j + 1) % rep.sides]
            if min(a, b) > LINE_TOL or max(a, b) < -LINE_TOL or not rep.crosses(lift.tile, j):
                continue
            T2, j2 = int(rep.neighbor[lift.tile, j]), int(rep.neighbor_side[lift.tile, j])
            n2 = Linv[lift.tile, j] @ lift.line
            # a twisted gluing slides the neighbour along the side, so the line
            # may enter the tile across one of the neighbour's adjacent sides
            cands = [(T2, n2)] + [(int(rep.neighbor[T2, k]), Linv[T2, k] @ n2)
                                  for k in ((j2 - 1) % rep.sides, (j2 + 1) % rep.sides)
                                  if rep.crosses(T2, k)]
            found = False
            for T3, n3 in cands:
                if not _meets_polygon(verts, n3):
                    continue
                hit = _line_lookup(tables[T3], n3)
                if hit is not None:
                    uf.union(i, hit)
                    found = True
            dangling += not found
    if dangling:
        log.warning("%d axis transports found no partner lift", dangling)

    comps: dict[int, list[int]] = {}
    for i in range(len(items)):
        comps.setdefault(uf.find(i), []).append(i)

    labels = {}
    for curve, lines in known_curve_lines(rep, curves).items():
        for tile, n in lines:
            hit = _line_lookup(tables[tile], n)
            if hit is not None:
                labels[uf.find(hit)] = curve

    classes = []
    for root, members in comps.items():
        best = min(members, key=lambda i: (items[i].length, len(items[i].word), i))
        lift = items[best]
        kind, idx = labels.get(root, ("other", None))
        classes.append(GeodesicClass(canonical_word(rep, lift.word), lift.length, lift.trace,
                                     kind, idx, shadow(rep, lift.word), len(members)))
    classes.sort(key=lambda c: (round(c.length, 9), c.kind, -1 if c.curve is None else c.curve,
                                c.crossing_word))
    return classes


def systole_report(rep: HolonomyRep, curves: CurveSystem | None = None, lmax: float | None = None,
                   step: float = 0.5, tol: float = LENGTH_TOL, workers: int = 1,
                   max_lmax: float = 20.0) -> SystoleReport:
    """Systole, its classes and the next length, growing the search bound as needed."""
    if lmax is None:
        known = [2 * rep.t]
        if curves is not None:
            known += [plane.translation_length(float(np.trace(rep.word_matrix(curves.red_word(f)))))
                      for f in curves.red]
        lmax = min(known) + 0.3
    while True:
        classes = enumerate_closed_geodesics(rep, lmax, curves, workers)
        if classes:
            L0 = classes[0].length
            sys = [c for c in classes if c.length <= L0 + tol]
            rest = [c for c in classes if c.length > L0 + tol]
            if rest:
                return SystoleReport(L0, sys, rest[0].length, lmax, classes)
        if lmax + step > max_lmax:
            raise SearchLimitError(f"no second length below {max_lmax}", classes)
        lmax += step


def shadow_violations(classes, t: float, p: int, s: float, tol: float = LENGTH_TOL) -> list[str]:
    """Classes breaking the length bounds implied by the map's girth."""
    bad = []
    for c in classes:
        if c.kind == "blue":
            continue
        if c.contractible_shadow:
            if not c.length > 2 * t + tol:
                bad.append(f"contractible shadow with length {c.length:.12g} <= 2t")
        elif c.length < p * s - tol or (c.kind != "red" and c.length <= p * s + tol):
            bad.append(f"{c.kind} class with shadow of length {len(c.shadow)} has length {c.length:.12g}")
    return bad


# --- block lemma ---------------------------------------------------------------

@dataclass
class BlockReport:
    q: int
    t: float
    s: float
    min_boundary_distance: float
    min_self_arc_bound: float

    @property
    def passed(self) -> bool:
        return abs(self.min_boundary_distance - self.s) <= 1e-10 and self.min_self_arc_bound > self.t


def verify_block_lemma(q: int, t: float) -> BlockReport:
    """Arc bounds in the sphere with q holes, read off distances between polygon sides.

    Boundary components are the blue sides; arcs between two of them fold onto
    arcs between distinct blue sides of the polygon.  An essential arc from a
    boundary component to itself must reach a red side not adjacent to it and
    come back, so twice that distance bounds it from below.
    """
    emb = embed_polygon(q, t)
    n = 2 * q
    blue = range(0, n, 2)
    between = min(side_distance(emb, i, j) for i in blue for j in blue if i < j)
    self_arc = min(2 * side_distance(emb, i, j) for i in blue for j in range(1, n, 2)
                   if (j - i) % n not in (1, n - 1))
    return BlockReport(q, t, emb.spec.s, between, self_arc)


# --- filling -------------------------------------------------------------------

@dataclass
class FillingReport:
    vertices: int
    edges: int
    faces: int
    genus: int
    face_sizes: dict[int, int]
    connected: bool = True

    @property
    def euler(self) -> int:
        return self.vertices - self.edges + self.faces

    @property
    def filling(self) -> bool:
        return self.connected and self.euler == 2 - 2 * self.genus

    def __bool__(self) -> bool:
        return self.filling


def verify_filling(curves: CurveSystem, genus: int | None = None) -> FillingReport:
    """Euler count of the graph formed by the chosen blue and red curves.

    Faces are traced from the counter-clockwise order (red out, blue on sheet 0,
    red in, blue on sheet 1) at every crossing; the count equals the Euler
    characteristic exactly when every complementary region is a disk.
    """
    m = curves.surface_map
    if genus is None:
        genus = counts(m).genus_X
    rot: dict = {}      # half-edge -> next half-edge counter-clockwise
    opp: dict = {}
    n_vertices = 0

    def add_edge(a, b):
        opp[a], opp[b] = b, a

    for d in (c.dart for c in curves.crossings):
        hs = [(d, "red_out"), (d, "blue_plus"), (d, "red_in"), (d, "blue_minus")]
        for k in range(4):
            rot[hs[k]] = hs[(k + 1) % 4]
        n_vertices += 1

    def dummy(name):
        nonlocal n_vertices
        a, b = (name, "out"), (name, "in")
        rot[a], rot[b] = b, a
        add_edge(a, b)
        n_vertices += 1

    for f in curves.red:
        pts = curves.red_points(f)
        if not pts:
            dummy(("red", f))
            continue
        for i, d in enumerate(pts):
            add_edge((d, "red_out"), (pts[(i + 1) % len(pts)], "red_in"))
    for e in curves.blue:
        pts = curves.blue_points(e)
        if not pts:
            dummy(("blue", e))
        elif len(pts) == 1:
            add_edge((pts[0], "blue_plus"), (pts[0], "blue_minus"))
        else:
            a, b = pts
            add_edge((a, "blue_plus"), (b, "blue_plus"))
            add_edge((a, "blue_minus"), (b, "blue_minus"))
    if set(opp) != set(rot):
        raise ValueError("inconsistent crossing data: unmatched half-edges")

    # a filling union is connected; face tracing alone miscounts disjoint pieces
    comp = _UnionFind(len(rot))
    index = {h: i for i, h in enumerate(sorted(rot, key=repr))}
    for h in rot:
        comp.union(index[h], index[rot[h]])
        comp.union(index[h], index[opp[h]])
    connected = len({comp.find(i) for i in index.values()}) <= 1

    seen = set()
    sizes: dict[int, int] = {}
    for h in sorted(rot, key=repr):
        if h in seen:
            continue
        size = 0
        x = h
        while x not in seen:
            seen.add(x)
            size += 1
            x = rot[opp[x]]
        sizes[size] = sizes.get(size, 0) + 1
    return FillingReport(n_vertices, len(opp) // 2, sum(sizes.values()), genus,
                         dict(sorted(sizes.items())), connected)
