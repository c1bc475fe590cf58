import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PQ
from systolefill import plane
from systolefill.assembly import (AssemblyError, CurveSystem, build_block, build_surface,
                                  corner_cycles, curve_holonomy, curve_length, rotate_word, tile_of)
from systolefill.hyptrig import red_side_length, solve_t0
from systolefill.maps import SurfaceMap, catalog


def red_length_formula(p, q, t, r):
    s = red_side_length(q, t)
    return 2 * p * math.acosh(math.cosh(r / 2) * math.cosh(s / 2))


@pytest.mark.parametrize("name", sorted(PQ))
def test_untwisted_lengths(name):
    p, q = PQ[name]
    t = solve_t0(p, q)
    curves, rep = build_surface(catalog(name), t)
    assert rep.tiles == 2 * catalog(name).V
    assert rep.corner_residual < 1e-12
    for e in curves.blue:
        assert curve_length(rep, curves, ("blue", e)) == pytest.approx(2 * t, abs=1e-12)
    for f in curves.red:
        assert curve_length(rep, curves, ("red", f)) == pytest.approx(p * red_side_length(q, t), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(1.0, 3.0), st.floats(-0.8, 0.8))
def test_twisted_red_length_follows_pythagoras(t, r):
    curves, rep = build_surface(catalog("tetrahedron"), t, r)
    for f in curves.red:
        assert curve_length(rep, curves, ("red", f)) == pytest.approx(red_length_formula(3, 3, t, r), abs=1e-10)
    for e in curves.blue:
        assert curve_length(rep, curves, ("blue", e)) == pytest.approx(2 * t, abs=1e-10)


def test_per_edge_twists():
    m = catalog("cube")
    r = np.linspace(-0.3, 0.4, m.E)
    curves, rep = build_surface(m, 2.0, r)
    assert np.allclose(rep.twist, r)
    assert rep.corner_residual < 1e-12
    twisted = rep.with_twist(np.zeros(m.E))
    assert np.allclose(twisted.twist, 0)


def test_corner_cycles_close_and_cover_all_corners(tetra_t0):
    curves, rep = tetra_t0
    cycles = corner_cycles(rep)
    # four polygon corners meet at every vertex of the tiling
    assert all(len(w) == 4 for w, _ in cycles)
    assert len(cycles) * 4 == rep.tiles * rep.sides
    assert max(res for _, res in cycles) < 1e-12


def test_pairings_are_mirrors_on_red_sides(tetra_t0):
    _, rep = tetra_t0
    for T in range(rep.tiles):
        for j in range(rep.sides):
            det = np.linalg.det(rep.pairing[T, j])
            if j % 2:
                assert det == pytest.approx(-1.0)
                assert rep.neighbor[T, j] == T ^ 1
            else:
                assert det == pytest.approx(1.0)
                assert rep.neighbor[T, j] % 2 == T % 2


def test_curve_system_crossings(tetra):
    curves = CurveSystem(tetra)
    assert len(curves.crossings) == 2 * tetra.E
    assert all(len(curves.red_points(f)) == 3 for f in curves.red)
    assert all(len(curves.blue_points(e)) == 2 for e in curves.blue)
    table = curves.incidence_matrix()
    assert all(sum(row) == 3 for row in table)
    assert all(sum(col) == 2 for col in zip(*table))
    c = curves.crossings[0]
    assert curves.incident(c.red, c.blue)
    assert curves.crossing(c.red, c.blue) == c


def test_vertex_stars(tetra):
    curves = CurveSystem(tetra)
    for star in curves.vertex_stars:
        q = len(star.blue)
        for j in range(q):
            assert curves.incident(star.red[j], star.blue[j])
            assert curves.incident(star.red[j], star.blue[j - 1])


def test_subsystem_restricts_crossings(tetra):
    curves = CurveSystem(tetra).subsystem(red=[0])
    assert {c.red for c in curves.crossings} == {0}
    assert len(curves.crossings) == 3


def test_curve_words_are_closed(tetra_t0):
    curves, rep = tetra_t0
    for e in curves.blue:
        assert curve_holonomy(rep, curves, ("blue", e)).kind == "hyperbolic"
    for f in curves.red:
        for d in tetra_t0[0].surface_map.faces[f]:
            w = curves.red_word(f, start=d)
            assert w[0][0] == tile_of(curves.surface_map.vertex_of[d], 0)
            assert rep.word_element(w).translation_length == pytest.approx(
                curve_length(rep, curves, ("red", f)), abs=1e-12)
    with pytest.raises(KeyError):
        curves.word(("green", 0))


def test_conjugate_words_have_equal_trace(tetra_t0):
    curves, rep = tetra_t0
    w = curves.red_word(0)
    tr = abs(np.trace(rep.word_matrix(w)))
    for k in range(len(w)):
        assert abs(np.trace(rep.word_matrix(rotate_word(w, k)))) == pytest.approx(tr, rel=1e-12)


def test_word_matrix_rejects_broken_words(tetra_t0):
    curves, rep = tetra_t0
    w = curves.red_word(0)
    with pytest.raises(ValueError, match="contiguous"):
        rep.word_matrix([w[0], w[0]])
    with pytest.raises(ValueError, match="close"):
        rep.word_matrix(w[:2])


def test_blue_geodesic_is_the_blue_side(tetra_t0):
    curves, rep = tetra_t0
    m = curves.surface_map
    for e in curves.blue:
        d = m.edges[e][0]
        n = plane.axis(rep.word_matrix(curves.blue_word(e)))
        side = rep.polygon.side_lines[2 * m.position_of[d]]
        assert min(np.abs(n - side).max(), np.abs(n + side).max()) < 1e-12


def test_invalid_map_is_rejected():
    # theta graph on the torus: one hexagonal face but a 2-cycle
    theta = SurfaceMap(6, (2, 3, 4, 5, 0, 1), (1, 0, 3, 2, 5, 4))
    assert theta.faces == [(0, 3, 4, 1, 2, 5)] and theta.genus == 1
    with pytest.raises(AssemblyError, match="girth 2"):
        build_surface(theta, 1.0)


def test_block_has_boundary_blue_sides():
    rep = build_block(3, 1.5)
    assert rep.tiles == 2
    assert all(not rep.crosses(T, j) for T in range(2) for j in range(0, 6, 2))
    assert all(rep.crosses(T, j) for T in range(2) for j in range(1, 6, 2))
    with pytest.raises(ValueError):
        rep.with_twist(0.1)
