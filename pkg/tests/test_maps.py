import json
from collections import deque
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from systolefill.hyptrig import DomainError
from systolefill.maps import (CATALOG_NAMES, MapStructureError, SurfaceMap, catalog, cell_dimension,
                              counts, dimension_coefficient, map_type, validate)

EXPECTED = {
    # name: (V, E, F, (p, q), genus of the doubled surface, girth)
    "tetrahedron": (4, 6, 4, (3, 3), 3, 3),
    "cube": (8, 12, 6, (4, 3), 5, 4),
    "dodecahedron": (20, 30, 12, (5, 3), 11, 5),
}


def girth_oracle(m):
    """Shortest cycle: drop each edge and join its ends by a shortest path."""
    edges = [(m.vertex_of[a], m.vertex_of[b]) for a, b in m.edges]
    best = None
    for k, (u, w) in enumerate(edges):
        if u == w:
            return 1
        dist = {u: 0}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            for j, (a, b) in enumerate(edges):
                if j == k or x not in (a, b):
                    continue
                y = b if x == a else a
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        if w in dist and (best is None or dist[w] + 1 < best):
            best = dist[w] + 1
    return best


@st.composite
def random_maps(draw):
    k = draw(st.integers(1, 7))
    n = 2 * k
    sigma = draw(st.permutations(range(n)))
    order = draw(st.permutations(range(n)))
    iota = [0] * n
    for i in range(0, n, 2):
        a, b = order[i], order[i + 1]
        iota[a], iota[b] = b, a
    return SurfaceMap(n, tuple(sigma), tuple(iota))


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_catalog_counts(name):
    m = catalog(name)
    V, E, F, pq, g, girth = EXPECTED[name]
    assert (m.V, m.E, m.F) == (V, E, F)
    assert m.genus == 0
    assert map_type(m) == pq
    assert m.is_connected()
    assert m.girth() == girth == girth_oracle(m)
    assert validate(m, *pq)
    c = counts(m)
    assert (c.genus_X, c.blue, c.red) == (g, E, F)


def test_catalog_unknown_name():
    with pytest.raises(KeyError, match="available"):
        catalog("icosahedron")


@given(random_maps())
def test_girth_agrees_with_oracle(m):
    assert m.girth() == girth_oracle(m)


@given(random_maps())
def test_euler_characteristic_is_even_when_connected(m):
    if m.is_connected():
        assert m.euler_characteristic % 2 == 0
        assert m.genus >= 0
    assert sum(len(f) for f in m.faces) == m.darts
    assert sorted(d for v in m.vertices for d in v) == list(range(m.darts))


@given(random_maps())
def test_serialization_round_trip(m):
    back = SurfaceMap.loads(m.dumps())
    assert back == m
    assert back.dumps() == m.dumps()


def test_save_and_load(tmp_path):
    m = catalog("cube")
    path = tmp_path / "cube.json"
    m.save(path)
    back = SurfaceMap.load(path)
    assert back == m and back.name == "cube"


def test_from_faces_builds_the_octahedron():
    octa = SurfaceMap.from_faces([(0, 2, 4), (0, 4, 3), (0, 3, 5), (0, 5, 2),
                                  (1, 4, 2), (1, 3, 4), (1, 5, 3), (1, 2, 5)])
    assert (octa.V, octa.E, octa.F, octa.genus) == (6, 12, 8, 0)
    assert map_type(octa) == (3, 4)
    assert octa.girth() == 3


def test_self_loop_fails_girth():
    loop = SurfaceMap(2, (1, 0), (1, 0))
    assert loop.girth() == 1
    report = validate(loop, 3, 2)
    assert not report
    assert any("girth 1" in r for r in report.reasons)


def test_validation_reports_wrong_type():
    report = validate(catalog("cube"), 3, 3)
    assert not report
    assert any("sides" in r for r in report.reasons)
    report = validate(catalog("cube"), 4, 4)
    assert any("degree" in r for r in report.reasons)


@pytest.mark.parametrize("data,match", [
    ({"darts": 3, "vertex_rotation": [0, 1, 2], "edge_involution": [1, 0, 2]}, "even"),
    ({"darts": 2, "vertex_rotation": [0, 0], "edge_involution": [1, 0]}, "repeats"),
    ({"darts": 2, "vertex_rotation": [0, 5], "edge_involution": [1, 0]}, "not a dart"),
    ({"darts": 2, "vertex_rotation": [0, 1], "edge_involution": [0, 1]}, "fixes dart 0"),
    ({"darts": 4, "vertex_rotation": [0, 1, 2, 3], "edge_involution": [1, 2, 3, 0]}, "involution"),
    ({"darts": 2, "vertex_rotation": [0, 1]}, "missing"),
    ({"darts": 2, "vertex_rotation": [0], "edge_involution": [1, 0]}, "length"),
])
def test_structure_errors_name_the_problem(data, match):
    with pytest.raises(MapStructureError, match=match):
        SurfaceMap.from_dict(data)


def test_loads_rejects_non_json():
    with pytest.raises(MapStructureError):
        SurfaceMap.loads("not json")
    with pytest.raises(MapStructureError):
        SurfaceMap.loads("[1, 2]")


def test_dumps_is_compact_json():
    text = catalog("tetrahedron").dumps()
    assert text.endswith("\n") and " " not in text
    assert json.loads(text)["darts"] == 12


@pytest.mark.parametrize("name,W,C", [("tetrahedron", 6, 2), ("cube", 12, 6), ("dodecahedron", 30, 18)])
def test_cell_dimensions(name, W, C):
    m = catalog(name)
    w, c = cell_dimension(*map_type(m), counts(m).genus_X)
    assert (w, c) == (Fraction(W), Fraction(C))


def test_dimension_coefficient():
    coeff = dimension_coefficient(100, 101)
    assert coeff == 6 - Fraction(101, 99) - Fraction(202, 9900)
    assert coeff >= Fraction(495, 100)
    assert cell_dimension(100, 101, 1000)[1] == coeff * 999


def test_dimension_domain():
    with pytest.raises(DomainError):
        cell_dimension(3, 2, 5)
    with pytest.raises(DomainError):
        cell_dimension(0, 3, 5)


def test_counts_rejects_mixed_maps():
    pyramid = [(4, 0, 1), (4, 1, 2), (4, 2, 3), (4, 3, 0), (0, 3, 2, 1)]
    mixed = SurfaceMap.from_faces(pyramid)
    assert mixed.genus == 0
    with pytest.raises(DomainError):
        counts(mixed)
