"""Combinatorial maps of type {p,q} encoded as rotation systems on darts.

A map is a pair of permutations of the darts ``0..n-1``: ``vertex_rotation``
(its cycles are the vertices, listing the incident darts counter-clockwise)
and ``edge_involution`` (fixed-point free, pairing the two darts of an edge).
Faces are the cycles of ``edge_involution o vertex_rotation``; the face cycle
entry ``d`` stands for the corner between ``d`` and ``vertex_rotation[d]``.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

from .hyptrig import DomainError

NO_CYCLE = None


class MapStructureError(ValueError):
    """Malformed permutation data."""


def _cycles(perm: tuple[int, ...]) -> list[tuple[int, ...]]:
    seen = [False] * len(perm)
    out = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cyc = []
        d = start
        while not seen[d]:
            seen[d] = True
            cyc.append(d)
            d = perm[d]
        out.append(tuple(cyc))
    return out


def _check_perm(name: str, perm, n: int) -> tuple[int, ...]:
    perm = tuple(perm)
    if len(perm) != n:
        raise MapStructureError(f"{name}: length {len(perm)} != darts {n}")
    seen = {}
    for i, x in enumerate(perm):
        if not isinstance(x, int) or isinstance(x, bool) or not 0 <= x < n:
            raise MapStructureError(f"{name}[{i}] = {x!r} is not a dart index")
        if x in seen:
            raise MapStructureError(f"{name}[{i}] = {x} repeats {name}[{seen[x]}]")
        seen[x] = i
    return perm


@dataclass(frozen=True)
class SurfaceMap:
    darts: int
    vertex_rotation: tuple[int, ...]
    edge_involution: tuple[int, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.darts
        if not isinstance(n, int) or n <= 0 or n % 2:
            raise MapStructureError(f"darts must be a positive even integer, got {n!r}")
        object.__setattr__(self, "vertex_rotation", _check_perm("vertex_rotation", self.vertex_rotation, n))
        iota = _check_perm("edge_involution", self.edge_involution, n)
        for d, e in enumerate(iota):
            if e == d:
                raise MapStructureError(f"edge_involution fixes dart {d}")
            if iota[e] != d:
                raise MapStructureError(f"edge_involution is not an involution at dart {d}")
        object.__setattr__(self, "edge_involution", iota)

    # -- derived structure -------------------------------------------------

    @cached_property
    def vertices(self) -> list[tuple[int, ...]]:
        return _cycles(self.vertex_rotation)

    @cached_property
    def face_permutation(self) -> tuple[int, ...]:
        return tuple(self.edge_involution[self.vertex_rotation[d]] for d in range(self.darts))

    @cached_property
    def faces(self) -> list[tuple[int, ...]]:
        return _cycles(self.face_permutation)

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return sorted({(min(d, e), max(d, e)) for d, e in enumerate(self.edge_involution)})

    @cached_property
    def vertex_of(self) -> tuple[int, ...]:
        return self._index(self.vertices)

    @cached_property
    def position_of(self) -> tuple[int, ...]:
        """Position of each dart in its vertex cycle."""
        pos = [0] * self.darts
        for cyc in self.vertices:
            for k, d in enumerate(cyc):
                pos[d] = k
        return tuple(pos)

    @cached_property
    def face_of(self) -> tuple[int, ...]:
        return self._index(self.faces)

    @cached_property
    def edge_of(self) -> tuple[int, ...]:
        return self._index(self.edges)

    def _index(self, groups) -> tuple[int, ...]:
        out = [0] * self.darts
        for i, g in enumerate(groups):
            for d in g:
                out[d] = i
        return tuple(out)

    @property
    def V(self) -> int:
        return len(self.vertices)

    @property
    def E(self) -> int:
        return self.darts // 2

    @property
    def F(self) -> int:
        return len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.V - self.E + self.F

    @property
    def genus(self) -> int:
        """Genus of the closed surface the map is drawn on."""
        return (2 - self.euler_characteristic) // 2

    def degrees(self) -> set[int]:
        return {len(c) for c in self.vertices}

    def face_sizes(self) -> set[int]:
        return {len(c) for c in self.faces}

    def is_connected(self) -> bool:
        seen = {0}
        todo = [0]
        while todo:
            d = todo.pop()
            for e in (self.vertex_rotation[d], self.edge_involution[d]):
                if e not in seen:
                    seen.add(e)
                    todo.append(e)
        return len(seen) == self.darts

    def girth(self) -> int | None:
        """Length of the shortest cycle of the underlying multigraph, ``None`` for a forest."""
        vof, iota = self.vertex_of, self.edge_involution
        best = None
        for root in range(self.V):
            dist = {root: 0}
            via = {root: None}        # edge used to reach each vertex
            queue = deque([root])
            while queue:
                u = queue.popleft()
                for d in self.vertices[u]:
                    w, e = vof[iota[d]], self.edge_of[d]
                    if w not in dist:
                        dist[w], via[w] = dist[u] + 1, e
                        queue.append(w)
                    elif via[u] != e:
                        length = dist[u] + dist[w] + 1
                        if best is None or length < best:
                            best = length
        return best

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {"darts": self.darts,
                "vertex_rotation": list(self.vertex_rotation),
                "edge_involution": list(self.edge_involution)}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "SurfaceMap":
        missing = {"darts", "vertex_rotation", "edge_involution"} - set(data)
        if missing:
            raise MapStructureError(f"missing fields: {sorted(missing)}")
        return cls(data["darts"], tuple(data["vertex_rotation"]), tuple(data["edge_involution"]), name)

    @classmethod
    def loads(cls, text: str, name: str = "") -> "SurfaceMap":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MapStructureError(f"not a map document: {exc}") from None
        if not isinstance(data, dict):
            raise MapStructureError("map document must be an object")
        return cls.from_dict(data, name)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "SurfaceMap":
        path = Path(path)
        return cls.loads(path.read_text(), name=path.stem)

    @classmethod
    def from_faces(cls, faces, name: str = "") -> "SurfaceMap":
        """Build from consistently oriented vertex cycles of the faces."""
        edge_ids: dict[frozenset, int] = {}
        for f in faces:
            for a, b in zip(f, f[1:] + f[:1]):
                edge_ids.setdefault(frozenset((a, b)), len(edge_ids))

        def dart(a, b):
            e = edge_ids[frozenset((a, b))]
            return 2 * e if a < b else 2 * e + 1

        n = 2 * len(edge_ids)
        sigma = [-1] * n
        for f in faces:
            m = len(f)
            for i in range(m):
                sigma[dart(f[i], f[i - 1])] = dart(f[i], f[(i + 1) % m])
        return cls(n, tuple(sigma), tuple(d ^ 1 for d in range(n)), name)


@dataclass
class ValidationReport:
    passed: bool
    reasons: list[str]
    girth: int | None

    def __bool__(self) -> bool:
        return self.passed


def validate(m: SurfaceMap, p: int, q: int) -> ValidationReport:
    reasons = []
    if not m.is_connected():
        reasons.append("map is not connected")
    bad_v = [i for i, c in enumerate(m.vertices) if len(c) != q]
    if bad_v:
        reasons.append(f"vertices {bad_v} do not have degree {q}")
    bad_f = [i for i, c in enumerate(m.faces) if len(c) != p]
    if bad_f:
        reasons.append(f"faces {bad_f} do not have {p} sides")
    g = m.girth()
    if g is not None and g < p:
        reasons.append(f"girth {g} < p = {p}")
    return ValidationReport(not reasons, reasons, g)


def map_type(m: SurfaceMap) -> tuple[int, int]:
    """(p, q) of a map with uniform face size and vertex degree."""
    (p,), (q,) = m.face_sizes(), m.degrees()
    return p, q


@dataclass(frozen=True)
class Counts:
    V: int
    E: int
    F: int
    genus_X: int
    blue: int
    red: int


def counts(m: SurfaceMap) -> Counts:
    """Vertex/edge/face counts and the genus and curve counts of the doubled surface."""
    try:
        p, q = map_type(m)
    except ValueError:
        raise DomainError("map is not of a uniform type {p,q}") from None
    twice = (q - 2) * m.V
    if twice % 2:
        raise DomainError(f"(q-2)V = {twice} is odd; map data is inconsistent")
    g = twice // 2 + 1
    blue = Fraction(q, q - 2) * (g - 1)
    red = Fraction(2 * q, p * (q - 2)) * (g - 1)
    if blue != m.E or red != m.F:
        raise DomainError(f"curve-count formulas ({blue}, {red}) disagree with (E, F) = ({m.E}, {m.F})")
    return Counts(m.V, m.E, m.F, g, m.E, m.F)


def cell_dimension(p: int, q: int, g: int) -> tuple[Fraction, Fraction]:
    """Dimensions of the level set W of blue lengths and of the cell C inside it."""
    if q <= 2:
        raise DomainError("q must exceed 2")
    if p <= 0:
        raise DomainError("p must be positive")
    w = (6 - Fraction(q, q - 2)) * (g - 1)
    c = w - Fraction(2 * q, p * (q - 2)) * (g - 1)
    return w, c


def dimension_coefficient(p: int, q: int) -> Fraction:
    """dim C / (g - 1)."""
    return cell_dimension(p, q, 2)[1]


# Genus-0 Platonic maps, counter-clockwise rotations seen from outside.
_CATALOG = {
    "tetrahedron": '{"darts":12,"vertex_rotation":[2,8,6,4,10,1,0,11,5,7,3,9],'
                   '"edge_involution":[1,0,3,2,5,4,7,6,9,8,11,10]}',
    "cube": '{"darts":24,"vertex_rotation":[2,10,8,4,20,7,1,14,0,18,6,13,9,16,5,17,11,23,12,21,3,22,19,15],'
            '"edge_involution":[1,0,3,2,5,4,7,6,9,8,11,10,13,12,15,14,17,16,19,18,21,20,23,22]}',
    "dodecahedron": '{"darts":60,"vertex_rotation":[56,3,4,42,40,6,11,9,0,17,12,5,20,15,16,18,28,7,13,'
                    '31,10,23,24,36,34,19,48,29,14,54,26,25,44,35,22,46,21,39,32,41,2,37,1,45,38,51,'
                    '33,49,30,53,52,43,58,47,27,57,8,59,50,55],'
                    '"edge_involution":[1,0,3,2,5,4,7,6,9,8,11,10,13,12,15,14,17,16,19,18,21,20,23,22,'
                    '25,24,27,26,29,28,31,30,33,32,35,34,37,36,39,38,41,40,43,42,45,44,47,46,49,48,51,'
                    '50,53,52,55,54,57,56,59,58]}',
}

CATALOG_NAMES = tuple(_CATALOG)


def catalog(name: str) -> SurfaceMap:
    try:
        text = _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown map {name!r}; available: {', '.join(CATALOG_NAMES)}") from None
    return SurfaceMap.loads(text, name=name)
