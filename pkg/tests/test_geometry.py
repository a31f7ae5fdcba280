import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import star_polygon
from sewkit.errors import SewError
from sewkit.geometry import (
    bezier_point,
    boundary_polygon,
    control_to_absolute,
    ear_clip,
    edge_arc_length,
    is_simple_polygon,
    sample_edge,
    shoelace,
    triangulate_panel,
)
from sewkit.model import EdgeSpec, Panel

finite = st.floats(-100, 100, allow_nan=False)
point = st.tuples(finite, finite)
unit = st.floats(0.0, 1.0)


def curve_panel(control):
    # edge 0 runs (0,0) -> (2,0); the rest closes a triangle
    return Panel.from_polygon("c", [(0, 0), (2, 0), (1, 3)], [control, None, None])


def dense_length(f, n=1_000_000):
    t = np.linspace(0.0, 1.0, n + 1)
    p = f(t)
    return float(np.hypot(np.diff(p[:, 0]), np.diff(p[:, 1])).sum())


def quad(v_s, c, v_e):
    v_s, c, v_e = (np.asarray(x, dtype=float) for x in (v_s, c, v_e))
    return lambda t: ((1 - t) ** 2)[:, None] * v_s + (2 * (1 - t) * t)[:, None] * c + (t**2)[:, None] * v_e


# control point conversion

def test_control_to_absolute_examples():
    assert control_to_absolute((0, 0), (2, 0), (0.5, 0.5)) == (1.0, 1.0)
    assert control_to_absolute((0, 0), (2, 0), (0.5, 0.0)) == (1.0, 0.0)
    assert control_to_absolute((3, 4), (7, -1), (0, 0)) == (3.0, 4.0)


def test_control_to_absolute_degenerate():
    with pytest.raises(SewError) as e:
        control_to_absolute((1, 1), (1, 1), (0.5, 0.5))
    assert e.value.code == "DEGENERATE_EDGE"


@given(point, point, point)
def test_control_frame_is_similarity(v_s, v_e, c):
    # the relative frame is the chord scaled and rotated; check against a complex-number oracle
    if v_s == v_e:
        return
    got = control_to_absolute(v_s, v_e, c)
    z = complex(*v_s) + complex(*c) * (complex(*v_e) - complex(*v_s))
    scale = 1.0 + abs(complex(*v_s)) + abs(complex(*v_e)) * (1.0 + abs(complex(*c)))
    assert math.isclose(got[0], z.real, abs_tol=1e-9 * scale)
    assert math.isclose(got[1], z.imag, abs_tol=1e-9 * scale)


# Bezier evaluation

def test_bezier_midpoint():
    p = bezier_point((0, 0), (1, 1), (2, 0), 0.5)
    assert abs(p[0] - 1.0) <= 1e-12 and abs(p[1] - 0.5) <= 1e-12


@given(point, point, point)
def test_bezier_endpoints_bitwise(v_s, c, v_e):
    assert tuple(bezier_point(v_s, c, v_e, 0.0)) == tuple(map(float, v_s))
    assert tuple(bezier_point(v_s, c, v_e, 1.0)) == tuple(map(float, v_e))


@pytest.mark.parametrize("t", [-1e-9, 1.0 + 1e-9, float("nan")])
def test_bezier_param_range(t):
    with pytest.raises(SewError) as e:
        bezier_point((0, 0), (1, 1), (2, 0), t)
    assert e.value.code == "PARAM_OUT_OF_RANGE"


@given(point, point, st.floats(0.0, 1.0), unit)
def test_bezier_control_on_segment_is_collinear(v_s, v_e, s, t):
    c = (v_s[0] + s * (v_e[0] - v_s[0]), v_s[1] + s * (v_e[1] - v_s[1]))
    p = bezier_point(v_s, c, v_e, t)
    cross = (v_e[0] - v_s[0]) * (p[1] - v_s[1]) - (v_e[1] - v_s[1]) * (p[0] - v_s[0])
    scale = 1.0 + max(map(abs, v_s + v_e)) ** 2
    assert abs(cross) <= 1e-9 * scale


@given(point, point, point, unit)
def test_bezier_matches_polynomial_form(v_s, c, v_e, t):
    want = quad(v_s, c, v_e)(np.array([t]))[0]
    got = bezier_point(v_s, c, v_e, t)
    assert np.allclose(got, want, rtol=0, atol=1e-9 * (1 + np.abs(want).max()))


# sampling

def test_sample_straight_edge():
    panel = Panel.from_polygon("t", [(0, 0), (3, 4), (-1, 2)])
    assert sample_edge(panel.edges[0], panel, 1) == [(0.0, 0.0), (3.0, 4.0)]


def test_sample_curve_includes_midpoint():
    panel = curve_panel((0.5, 0.5))
    pts = sample_edge(panel.edges[0], panel, 2)
    assert pts[0] == (0.0, 0.0) and pts[2] == (2.0, 0.0)
    assert abs(pts[1][0] - 1.0) <= 1e-12 and abs(pts[1][1] - 0.5) <= 1e-12


def _deviation(panel, n):
    # max distance from the true curve, measured on a dense parameter grid
    pts = np.asarray(sample_edge(panel.edges[0], panel, n))
    t = np.linspace(0, 1, 4001)
    f = quad(panel.vertices[0], control_to_absolute(panel.vertices[0], panel.vertices[1], panel.edges[0].control), panel.vertices[1])
    curve = f(t)
    seg = np.minimum((t * n).astype(int), n - 1)
    a, b = pts[seg], pts[seg + 1]
    d = b - a
    u = np.clip(((curve - a) * d).sum(1) / (d * d).sum(1), 0, 1)
    return float(np.linalg.norm(curve - (a + u[:, None] * d), axis=1).max())


@given(st.floats(0.1, 0.9), st.floats(-0.8, 0.8))
@settings(max_examples=30, deadline=None)
def test_sampling_refinement_monotone(cx, cy):
    panel = curve_panel((cx, cy))
    devs = [_deviation(panel, n) for n in (1, 2, 4, 8, 16, 32)]
    assert all(b <= a + 1e-12 for a, b in zip(devs, devs[1:]))


# arc length

def test_arc_length_straight():
    panel = Panel.from_polygon("t", [(0, 0), (3, 4), (-1, 2)])
    assert edge_arc_length(panel.edges[0], panel) == 5.0


def test_arc_length_degenerate_curve():
    panel = curve_panel((0.5, 0.0))
    assert abs(edge_arc_length(panel.edges[0], panel, tol=1e-12) - 2.0) <= 1e-9


def test_arc_length_dense_oracle():
    panel = curve_panel((0.5, 0.5))
    oracle = dense_length(quad((0, 0), (1, 1), (2, 0)))
    # closed form for this parabola as a second check
    closed = math.sqrt(2) + math.asinh(1)
    assert abs(oracle - closed) < 1e-9
    assert abs(edge_arc_length(panel.edges[0], panel, tol=1e-9) - oracle) < 1e-8


@given(st.floats(0.05, 0.95), st.floats(-1.0, 1.0))
@settings(max_examples=20, deadline=None)
def test_arc_length_vs_dense(cx, cy):
    panel = curve_panel((cx, cy))
    c = control_to_absolute((0, 0), (2, 0), (cx, cy))
    oracle = dense_length(quad((0, 0), c, (2, 0)), n=200_000)
    assert abs(edge_arc_length(panel.edges[0], panel, tol=1e-10) - oracle) < 1e-7


# polygons and triangulation

def test_shoelace_and_simplicity():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert shoelace(sq) == 1.0
    assert shoelace(sq[::-1]) == -1.0
    assert is_simple_polygon(sq)
    assert not is_simple_polygon([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_unit_square_two_triangles(unit_square):
    mesh = triangulate_panel(unit_square)
    assert len(mesh.triangles) == 2
    assert mesh.triangle_areas().sum() == pytest.approx(1.0, abs=1e-15)


def test_l_shape_area():
    verts = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
    mesh = triangulate_panel(Panel.from_polygon("L", verts))
    assert len(mesh.triangles) == 4
    assert abs(mesh.triangle_areas().sum() - shoelace(verts)) <= 1e-12
    assert (mesh.triangle_areas() > 0).all()


def test_clockwise_rejected():
    with pytest.raises(SewError) as e:
        triangulate_panel(Panel.from_polygon("cw", [(0, 0), (0, 1), (1, 1), (1, 0)]))
    assert e.value.code == "NEGATIVE_AREA"


def test_self_intersecting_rejected():
    with pytest.raises(SewError) as e:
        triangulate_panel(Panel.from_polygon("bow", [(0, 0), (1, 1), (1, 0), (0, 1)]))
    assert e.value.code == "NON_SIMPLE_POLYGON"


@given(st.integers(3, 40), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_ear_clip_count_and_area(n, seed):
    pts = star_polygon(np.random.default_rng(seed), n, scale=10.0)
    tris = ear_clip(pts)
    assert len(tris) == n - 2
    p = np.asarray(pts)
    t = np.asarray(tris)
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    assert (area > 0).all()
    assert abs(area.sum() - shoelace(pts)) <= 1e-9 * shoelace(pts)


@given(st.integers(3, 12), st.integers(0, 2**32 - 1), st.floats(0.5, 5.0))
@settings(max_examples=40, deadline=None)
def test_refinement_properties(n, seed, target):
    rng = np.random.default_rng(seed)
    controls = [(float(rng.uniform(0.3, 0.7)), float(rng.uniform(-0.08, 0.08))) if rng.random() < 0.4 else None for _ in range(n)]
    panel = Panel.from_polygon("r", star_polygon(rng, n, scale=10.0), controls)
    pts, _ = boundary_polygon(panel, 16, target)
    if not is_simple_polygon(pts):
        return
    mesh = triangulate_panel(panel, 16, target)
    areas = mesh.triangle_areas()
    assert (areas > 0).all()
    assert abs(areas.sum() - shoelace(pts)) <= 1e-9 * shoelace(pts)
    assert mesh.edge_lengths().max() <= target * (1 + 1e-12)
    # every boundary point is used, and the edge map walks the whole loop once
    assert set(range(mesh.n_boundary)) <= set(mesh.triangles.ravel().tolist())
    walked = [i for idx in mesh.boundary_edge_map for i in idx[:-1]]
    assert walked == list(range(mesh.n_boundary))
    # endpoints of each edge are exactly the panel vertices
    for j, idx in enumerate(mesh.boundary_edge_map):
        assert tuple(mesh.points[idx[0]]) == panel.vertices[j]
