import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_files
from sewkit.assembly import GarmentMesh, assemble_garment, garment_layers
from sewkit.body import BodyTrack, Capsule, body_to_dict, capsule_distances, default_body, empty_body, parse_body
from sewkit.errors import SewError
from sewkit.pattern_io import read_pattern
from sewkit.sim import (
    SimParams,
    build_sim,
    constraint_error,
    drape,
    grid_cloth,
    initialize_outside,
    max_penetration,
    mesh_edges,
    project_collision,
    project_distance,
    shrink_waist,
    step,
    tube_cloth,
)
from sewkit import kernels

seeds = st.integers(0, 2**32 - 1)


def loose_mesh(positions, triangles, rest=None):
    pos = np.asarray(positions, float)
    n = len(pos)
    return GarmentMesh(
        positions=pos,
        triangles=np.asarray(triangles, np.int64).reshape(-1, 3),
        panel_of_vertex=np.zeros(n, np.int64),
        stitch_pairs=np.zeros((0, 2), np.int64),
        rest_mesh=(),
        rest_positions=pos[:, :2] if rest is None else np.asarray(rest, float),
        panel_names=("m",),
        vertex_offsets=np.array([0, n]),
        unit_scale=1.0,
    )


def sphere(center, r):
    return BodyTrack.static([Capsule(center, center, r)])


def test_constraint_counts():
    tri = loose_mesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)])
    s = build_sim(tri, empty_body())
    assert (s.n_stretch, s.n_bend, s.n_stitch) == (3, 0, 0)
    quad = loose_mesh([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)], [(0, 1, 2), (0, 2, 3)])
    s = build_sim(quad, empty_body())
    assert (s.n_stretch, s.n_bend) == (5, 1)
    assert sorted(s.pairs[s.bend_slice][0].tolist()) == [1, 3]
    assert s.rest[s.bend_slice][0] == pytest.approx(math.sqrt(2))


def test_mesh_edges_grid():
    g = grid_cloth(4, 3)
    edges, bends = mesh_edges(g.triangles)
    # (nx-1) ny + nx (ny-1) + diagonals
    assert len(edges) == 3 * 3 + 4 * 2 + 6
    assert len(bends) == len(edges) - 2 * (3 + 2)


def test_project_distance_example():
    da, db = project_distance((0, 0, 0), (2, 0, 0), 1.0, 1.0, 1.0, 1.0)
    assert np.array_equal(da, [0.5, 0, 0])
    assert np.array_equal(db, [-0.5, 0, 0])
    da, db = project_distance((0, 0, 0), (2, 0, 0), 0.0, 1.0, 1.0, 1.0)
    assert np.array_equal(da, [0, 0, 0]) and np.array_equal(db, [-1, 0, 0])
    with pytest.raises(ValueError):
        project_distance((0, 0, 0), (1, 0, 0), 0.0, 0.0, 1.0, 1.0)


pt = st.tuples(*[st.floats(-3, 3)] * 3)


@given(pt, pt, st.floats(0.01, 4), st.floats(0.01, 4), st.floats(0, 3), st.floats(0, 1))
def test_project_distance_properties(a, b, wa, wb, rest, k):
    a, b = np.asarray(a), np.asarray(b)
    da, db = project_distance(a, b, wa, wb, rest, k)
    # momentum with masses 1/w is conserved
    assert np.allclose(da / wa + db / wb, 0, atol=1e-9)
    d0 = np.linalg.norm(a - b)
    if d0 > 1e-6:
        d1 = np.linalg.norm(a + da - b - db)
        assert abs(d1 - rest) <= (1 - k) * abs(d0 - rest) + 1e-9


def test_project_collision_example():
    caps = [[0, 0, 0, 0, 1, 0, 0.5]]
    assert np.allclose(project_collision((0.2, 0.5, 0), caps), (0.5, 0.5, 0), atol=1e-15)
    assert np.array_equal(project_collision((1.0, 0.5, 0), caps), (1.0, 0.5, 0))


def test_free_fall_example():
    tri = loose_mesh([(0, 10, 0), (1, 10, 0), (0, 11, 0)], [(0, 1, 2)])
    s = build_sim(tri, empty_body())
    step(s, SimParams(dt=0.1, substeps=1, damping=0.0))
    assert np.allclose(s.velocities[:, 1], -0.98, atol=1e-12)
    assert np.allclose(s.positions[:, 1] - tri.positions[:, 1], -0.098, atol=1e-12)


def test_rest_state_is_fixed_point():
    g = grid_cloth(6, 6, 0.5)
    s = build_sim(g, empty_body())
    step(s, SimParams(gravity=(0, 0, 0)))
    assert np.abs(s.positions - g.positions).max() <= 1e-15


def test_pinned_particles_do_not_move():
    g = grid_cloth(5, 5, 0.4, origin=(0, 1, 0))
    s = build_sim(g, empty_body(), pinned=[20, 24])
    for _ in range(5):
        step(s)
    assert np.array_equal(s.positions[[20, 24]], g.positions[[20, 24]])
    assert (s.positions[:20, 1] < g.positions[:20, 1]).all()


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_collision_guarantee(seed):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.1, 0.3)
    body = sphere((0, 0, 0), r)
    g = grid_cloth(8, 8, 0.6, origin=(-0.3 + rng.uniform(-0.1, 0.1), r + rng.uniform(0.0, 0.05), 0.3), plane="xz")
    params = SimParams(collision_margin=float(rng.uniform(0, 0.01)))
    s = build_sim(g, body, params)
    for _ in range(15):
        step(s, params)
        assert max_penetration(s, params.collision_margin) <= 1e-9


def perturbed_cloth(rng, n=6):
    g = grid_cloth(n, n, 0.25)
    s = build_sim(g, empty_body())
    s.positions += rng.normal(scale=0.01, size=s.positions.shape)
    return s


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_constraint_error_non_increasing(seed):
    s = perturbed_cloth(np.random.default_rng(seed))
    k = np.ones(len(s.rest))
    errs = [constraint_error(s)]
    for _ in range(10):
        kernels.project_constraints(s.positions, s.inverse_masses, s.pairs, s.rest, k, 1)
        errs.append(constraint_error(s))
    assert all(b <= a * (1 + 1e-12) for a, b in zip(errs, errs[1:]))


def test_deterministic():
    g = grid_cloth(8, 8, 0.5, origin=(-0.25, 2.0, 0.25), plane="xz")
    a, ra = drape(g, default_body(), max_steps=40)
    b, rb = drape(g, default_body(), max_steps=40)
    assert a.positions.tobytes() == b.positions.tobytes()
    assert ra.settle_steps == rb.settle_steps


def test_shrink_waist():
    g = tube_cloth(0.1, 0.2, n_around=12, n_along=5)
    s = build_sim(g, empty_body())
    before = s.rest.copy()
    shrink_waist(s, (-1.0, -0.5), 0.5)  # band below the cloth
    assert np.array_equal(s.rest, before)
    shrink_waist(s, (-1.0, 1.0), 1.0)
    assert np.array_equal(s.rest, before)
    with pytest.raises(ValueError):
        shrink_waist(s, (0, 1), 0.0)
    # band holds the bottom ring (row 0 = vertices 0..12) only
    shrink_waist(s, (-0.01, 0.01), 0.9)
    ring = set(range(13))
    for c, (a, b) in enumerate(s.pairs.tolist()):
        scaled = s.stretch_slice.start <= c < s.stretch_slice.stop and a in ring and b in ring
        assert s.rest[c] == (before[c] * 0.9 if scaled else before[c])
    assert np.sum(s.rest != before) == 12


def test_initialize_outside_noop_when_clear():
    g = grid_cloth(4, 4, 0.2, origin=(1, 1, 1))
    s = build_sim(g, sphere((0, 0, 0), 0.3))
    initialize_outside(s)
    assert s.init_report["passes"] == 0
    assert np.array_equal(s.positions, g.positions)


def test_initialize_outside_resolves_tube():
    g = tube_cloth(0.16, 0.3, 32, 12, center=(0.06, 1.0, 0.0))
    s = build_sim(g, default_body())
    assert max_penetration(s) > 0.0
    rest = s.rest.copy()
    initialize_outside(s)
    assert s.init_report["passes"] > 0
    assert max_penetration(s) <= 1e-9
    assert np.array_equal(s.rest, rest)


def test_init_failed():
    # rigid small tube buried in a big sphere cannot escape in three passes
    g = tube_cloth(0.05, 0.05, 8, 3)
    s = build_sim(g, sphere((0, 0, 0), 0.5))
    with pytest.raises(SewError) as e:
        initialize_outside(s, max_passes=3)
    assert e.value.code == "INIT_FAILED"


def test_sim_diverged():
    g = grid_cloth(3, 3, 0.2)
    s = build_sim(g, empty_body())
    s.velocities[4] = np.inf
    with pytest.raises(SewError) as e:
        step(s)
    assert e.value.code == "SIM_DIVERGED"


def test_params_validation():
    for bad in (dict(dt=0), dict(substeps=0), dict(stretch_stiffness=1.5), dict(damping=1.0), dict(collision_margin=-1)):
        with pytest.raises(ValueError):
            SimParams(**bad)


@pytest.fixture(scope="module")
def outfit_drape():
    pat = read_pattern(corpus_files()[0].parent / "outfit.json").pattern
    g = assemble_garment(pat)
    return g, *drape(g, default_body())


def test_two_layer_clearance(outfit_drape):
    g, out, rep = outfit_drape
    assert rep.n_layers == 2 and rep.converged
    body = default_body()
    caps = body.capsules_at(body.end_time)
    assert rep.penetration <= 1e-6
    for k, comp in enumerate(garment_layers(g)):
        sel = np.isin(g.panel_of_vertex, comp)
        clear = (capsule_distances(out.positions[sel], caps) - caps[:, 6] - k * 0.004).min(axis=1)
        assert clear.min() >= -1e-6
    assert len(rep.init_passes) == 2


def test_waist_band_drape(outfit_drape):
    g, _, _ = outfit_drape
    out, rep = drape(g, default_body(), waist_band=(0.98, 1.2), waist_factor=0.9)
    assert rep.converged and rep.penetration <= 1e-6


# body proxy

def test_body_interpolation():
    a = (Capsule((0, 0, 0), (0, 1, 0), 0.1),)
    b = (Capsule((1, 0, 0), (1, 1, 0), 0.3),)
    body = BodyTrack(((0.0, a), (2.0, b)))
    assert np.allclose(body.capsules_at(1.0), [[0.5, 0, 0, 0.5, 1, 0, 0.2]])
    assert np.array_equal(body.capsules_at(-1.0), body.capsules_at(0.0))
    assert np.array_equal(body.capsules_at(5.0), [[1, 0, 0, 1, 1, 0, 0.3]])


def test_body_roundtrip_and_errors():
    import json

    body = default_body()
    assert parse_body(json.dumps(body_to_dict(body))) == body
    with pytest.raises(SewError) as e:
        parse_body("{")
    assert e.value.code == "MALFORMED_JSON"
    with pytest.raises(SewError) as e:
        parse_body('{"keyframes": [{"time": 0, "capsules": [{"p0": [0, 0], "p1": [0, 1, 0], "radius": 1}]}]}')
    assert e.value.code == "SCHEMA_VIOLATION"
    with pytest.raises(SewError):
        BodyTrack(((1.0, ()), (0.5, ())))


def test_capsule_distance_oracle():
    rng = np.random.default_rng(5)
    caps = np.array([[0, 0, 0, 0, 1, 0, 0.2], [1, 1, 1, 1, 1, 1, 0.5]], float)
    pts = rng.normal(size=(200, 3))
    t = np.linspace(0, 1, 20001)[:, None]
    for k, c in enumerate(caps):
        seg = c[:3] + t * (c[3:6] - c[:3])
        brute = np.sqrt(((pts[:, None, :] - seg[None]) ** 2).sum(-1)).min(1)
        assert np.allclose(capsule_distances(pts, caps)[:, k], brute, atol=1e-4)
