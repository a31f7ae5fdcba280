"""Position-based-dynamics drape of an assembled garment over a capsule body.

Constraint order is fixed: stretch (one per unique triangle edge), bend (one
per interior edge, joining the two opposite vertices), stitch (zero rest
length). Gauss-Seidel passes visit them in that index order, so a run is
fully determined by its inputs.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .assembly import GarmentMesh, garment_layers
from .body import BodyTrack, penetration_depths
from .errors import SewError

INIT_TOL = 1e-4
INIT_FAIL_TOL = 1e-3
INIT_MAX_PASSES = 500


@dataclass(frozen=True)
class SimParams:
    dt: float = 1.0 / 60.0
    substeps: int = 8
    iterations: int = 10
    stretch_stiffness: float = 1.0
    bend_stiffness: float = 1.0
    stitch_stiffness: float = 1.0
    gravity: tuple = (0.0, -9.8, 0.0)
    damping: float = 0.02
    collision_margin: float = 0.002
    # rounds of per-particle capsule projection inside one collision pass
    collision_rounds: int = 16
    # the solver is deterministic; the seed is carried into reports and sampling
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gravity", tuple(float(g) for g in self.gravity))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.substeps < 1 or self.iterations < 0:
            raise ValueError("substeps must be >= 1 and iterations >= 0")
        for name in ("stretch_stiffness", "bend_stiffness", "stitch_stiffness"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if self.collision_margin < 0:
            raise ValueError("collision_margin must be >= 0")


@dataclass
class SimState:
    positions: np.ndarray
    prev_positions: np.ndarray
    velocities: np.ndarray
    inverse_masses: np.ndarray
    pairs: np.ndarray
    rest: np.ndarray
    n_stretch: int
    n_bend: int
    n_stitch: int
    body: BodyTrack
    time: float = 0.0
    # body pose clock; stays put while the body is frozen
    body_time: float = 0.0
    freeze_body: bool = False
    layer_of_vertex: Optional[np.ndarray] = None
    layer_offset: float = 0.0
    init_report: dict = field(default_factory=dict)

    @property
    def n_particles(self) -> int:
        return len(self.positions)

    @property
    def stretch_slice(self) -> slice:
        return slice(0, self.n_stretch)

    @property
    def bend_slice(self) -> slice:
        return slice(self.n_stretch, self.n_stretch + self.n_bend)

    @property
    def stitch_slice(self) -> slice:
        return slice(self.n_stretch + self.n_bend, self.n_stretch + self.n_bend + self.n_stitch)

    def capsules(self) -> np.ndarray:
        return self.body.capsules_at(self.body_time)

    def copy(self) -> "SimState":
        return SimState(
            self.positions.copy(),
            self.prev_positions.copy(),
            self.velocities.copy(),
            self.inverse_masses.copy(),
            self.pairs.copy(),
            self.rest.copy(),
            self.n_stretch,
            self.n_bend,
            self.n_stitch,
            self.body,
            self.time,
            self.body_time,
            self.freeze_body,
            None if self.layer_of_vertex is None else self.layer_of_vertex.copy(),
            self.layer_offset,
            dict(self.init_report),
        )


def mesh_edges(triangles) -> tuple:
    """Unique sorted edges and, for interior edges, the two opposite vertices.

    Returns ``(edges, bend_pairs)``; ``bend_pairs`` follows the edge order.
    """
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    opposite: dict = {}
    for t in tris.tolist():
        for i in range(3):
            a, b, c = t[i], t[(i + 1) % 3], t[(i + 2) % 3]
            key = (a, b) if a < b else (b, a)
            opposite.setdefault(key, []).append(c)
    edges = sorted(opposite)
    bends = [tuple(opposite[e]) for e in edges if len(opposite[e]) == 2]
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2), np.asarray(bends, dtype=np.int64).reshape(-1, 2)


def build_sim(garment: GarmentMesh, body: BodyTrack, params: SimParams = SimParams(), pinned=()) -> SimState:
    """Particles and constraints for ``garment``; rest lengths come from the flat 2D panels."""
    edges, bends = mesh_edges(garment.triangles)
    rest2d = np.asarray(garment.rest_positions, dtype=float)

    def lengths(p):
        if len(p) == 0:
            return np.zeros(0)
        return np.linalg.norm(rest2d[p[:, 0]] - rest2d[p[:, 1]], axis=1)

    stitches = np.asarray(garment.stitch_pairs, dtype=np.int64).reshape(-1, 2)
    pairs = np.concatenate([edges, bends, stitches]).astype(np.int64)
    rest = np.concatenate([lengths(edges), lengths(bends), np.zeros(len(stitches))])
    n = garment.n_vertices
    w = np.ones(n)
    pinned = np.asarray(list(pinned), dtype=np.int64)
    if len(pinned):
        w[pinned] = 0.0
    pos = np.ascontiguousarray(garment.positions, dtype=np.float64).copy()
    return SimState(
        positions=pos,
        prev_positions=pos.copy(),
        velocities=np.zeros_like(pos),
        inverse_masses=w,
        pairs=np.ascontiguousarray(pairs),
        rest=rest,
        n_stretch=len(edges),
        n_bend=len(bends),
        n_stitch=len(stitches),
        body=body,
        time=0.0,
        body_time=body.start_time,
        layer_of_vertex=np.zeros(n, dtype=np.int64),
    )


def project_distance(p_a, p_b, w_a, w_b, rest, stiffness):
    """Single PBD distance projection; returns ``(dp_a, dp_b)``.

    ``dp_a = -stiffness * w_a / (w_a + w_b) * (|d| - rest) * d_hat`` with
    ``d = p_a - p_b``. Runs through the same kernel as the solver.
    """
    if not w_a + w_b > 0:
        raise ValueError("at least one particle must be movable")
    pos = np.array([p_a, p_b], dtype=np.float64)
    start = pos.copy()
    kernels.project_constraints(pos, np.array([w_a, w_b]), np.array([[0, 1]]), np.array([rest]), np.array([stiffness]), 1)
    return pos[0] - start[0], pos[1] - start[1]


def project_collision(p, capsules, margin: float = 0.0, max_rounds: int = 16) -> np.ndarray:
    """Project one point out of the capsules (rows ``p0, p1, radius``)."""
    pos = np.array([p], dtype=np.float64).reshape(1, 3)
    kernels.collide(pos, np.ones(1), np.asarray(capsules, dtype=float).reshape(-1, 7), margin, max_rounds)
    return pos[0]


def _stiffness(state: SimState, params: SimParams, force_rigid: bool = False) -> np.ndarray:
    k = np.empty(len(state.rest))
    if force_rigid:
        k[:] = 1.0
        return k
    k[state.stretch_slice] = params.stretch_stiffness
    k[state.bend_slice] = params.bend_stiffness
    k[state.stitch_slice] = params.stitch_stiffness
    return k


def _layer_ids(state: SimState) -> list:
    if state.layer_of_vertex is None:
        return [0]
    movable = state.inverse_masses > 0
    return sorted(set(state.layer_of_vertex[movable].tolist())) or [0]


def collision_pass(state: SimState, params: SimParams) -> int:
    """Push movable particles out of the body; layer ``k`` sees radii grown by ``k * layer_offset``."""
    caps = state.capsules()
    if len(caps) == 0:
        return 0
    count = 0
    layers = _layer_ids(state)
    for k in layers:
        c = caps.copy()
        c[:, 6] += k * state.layer_offset
        if len(layers) == 1:
            w = state.inverse_masses
        else:
            w = np.where(state.layer_of_vertex == k, state.inverse_masses, 0.0)
        count += kernels.collide(state.positions, w, c, params.collision_margin, params.collision_rounds)
    return count


def max_penetration(state: SimState, margin: float = 0.0) -> float:
    """Largest ``radius + layer inflation + margin - distance`` over movable particles (0 if none)."""
    caps = state.capsules()
    movable = state.inverse_masses > 0
    if len(caps) == 0 or not movable.any():
        return 0.0
    worst = 0.0
    layers = state.layer_of_vertex if state.layer_of_vertex is not None else np.zeros(state.n_particles, np.int64)
    for k in sorted(set(layers[movable].tolist())):
        c = caps.copy()
        c[:, 6] += k * state.layer_offset
        sel = movable & (layers == k)
        worst = max(worst, float(penetration_depths(state.positions[sel], c, margin).max()))
    return worst


def initialize_outside(state: SimState, params: SimParams = SimParams(), max_passes: int = INIT_MAX_PASSES) -> SimState:
    """Resolve initial body interpenetration with rigid constraints and no gravity.

    Each pass is: collision projection, then ``params.iterations`` constraint
    passes at stiffness 1. It stops once the constrained shape sits less than
    1e-4 m inside the body, followed by one last collision pass. Rest lengths
    are never modified. The outcome goes to ``state.init_report``.
    """
    margin = params.collision_margin
    pen = max_penetration(state, margin)
    passes = 0
    if pen >= INIT_TOL:
        k = _stiffness(state, params, force_rigid=True)
        while passes < max_passes:
            collision_pass(state, params)
            kernels.project_constraints(
                state.positions, state.inverse_masses, state.pairs, state.rest, k, params.iterations
            )
            passes += 1
            pen = max_penetration(state, margin)
            if pen < INIT_TOL:
                break
        if pen >= INIT_FAIL_TOL:
            raise SewError(
                "INIT_FAILED", f"penetration {pen:.3g} m remains after {passes} passes", None, residual=pen
            )
        collision_pass(state, params)
    state.prev_positions[:] = state.positions
    state.velocities[:] = 0.0
    state.init_report = {"passes": passes, "residual": max_penetration(state, margin), "pre_final_residual": pen}
    return state


def step(state: SimState, params: SimParams = SimParams()) -> SimState:
    """Advance one frame of ``params.dt`` split into ``params.substeps`` substeps."""
    h = params.dt / params.substeps
    g = np.asarray(params.gravity)
    w = state.inverse_masses
    movable = (w > 0)[:, None]
    k = _stiffness(state, params)
    keep = 1.0 - params.damping
    for _ in range(params.substeps):
        state.velocities += np.where(movable, g * h, 0.0)
        state.prev_positions[:] = state.positions
        state.positions += state.velocities * h
        if not state.freeze_body:
            state.body_time += h
        kernels.project_constraints(state.positions, w, state.pairs, state.rest, k, params.iterations)
        collision_pass(state, params)
        state.velocities[:] = (state.positions - state.prev_positions) / h * keep
    state.time += params.dt
    bad = ~np.isfinite(state.positions).all(axis=1)
    if bad.any():
        idx = int(np.argmax(bad))
        raise SewError("SIM_DIVERGED", f"particle {idx} has a non-finite position", idx)
    return state


def shrink_waist(state: SimState, band, factor: float) -> SimState:
    """Scale the rest length of stretch constraints lying wholly inside the height band.

    Membership uses current positions: both endpoints need ``y_lo <= y <= y_hi``.
    Bend and stitch constraints and everything outside the band stay untouched.
    """
    if not 0.0 < factor <= 1.0:
        raise ValueError("factor must lie in (0, 1]")
    y_lo, y_hi = band
    y = state.positions[:, 1]
    inside = (y >= y_lo) & (y <= y_hi)
    sl = state.stretch_slice
    p = state.pairs[sl]
    mask = inside[p[:, 0]] & inside[p[:, 1]]
    if factor != 1.0:
        state.rest[sl][mask] *= factor
    return state


def stretch_deviation(state: SimState) -> np.ndarray:
    """Per stretch constraint ``| |x_a - x_b| - rest | / rest``."""
    p = state.pairs[state.stretch_slice]
    r = state.rest[state.stretch_slice]
    if len(p) == 0:
        return np.zeros(0)
    d = np.linalg.norm(state.positions[p[:, 0]] - state.positions[p[:, 1]], axis=1)
    return np.abs(d - r) / np.where(r > 0, r, 1.0)


def constraint_error(state: SimState) -> float:
    """Sum of ``| |x_a - x_b| - rest |`` over every constraint."""
    p = state.pairs
    if len(p) == 0:
        return 0.0
    d = np.linalg.norm(state.positions[p[:, 0]] - state.positions[p[:, 1]], axis=1)
    return float(np.abs(d - state.rest).sum())


@dataclass
class DrapeReport:
    converged: bool
    settle_steps: int
    phase_steps: list
    n_layers: int
    stretch_residual: float
    mean_stretch_residual: float
    penetration: float
    stitch_gap_mean: float
    stitch_gap_max: float
    mean_rest_edge: float
    init_passes: list
    init_residual: float
    wall_time: float
    backend: str
    seed: int
    n_vertices: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _settle(state: SimState, params: SimParams, max_steps: int, settle_tol: float, body_end: float) -> tuple:
    movable = state.inverse_masses > 0
    steps = 0
    while steps < max_steps:
        before = state.positions[movable].copy()
        step(state, params)
        steps += 1
        disp = float(np.linalg.norm(state.positions[movable] - before, axis=1).max()) if movable.any() else 0.0
        if disp < settle_tol and (state.freeze_body or state.body_time >= body_end):
            return steps, True
    return steps, False


def drape(
    garment: GarmentMesh,
    body: BodyTrack,
    params: SimParams = SimParams(),
    max_steps: int = 2000,
    settle_tol: float = 1e-4,
    layer_offset: float = 0.004,
    pinned=(),
    layers=None,
    waist_band=None,
    waist_factor: float = 1.0,
):
    """Drape ``garment`` on ``body``; returns ``(draped GarmentMesh, DrapeReport)``.

    Layers (stitch components, bottom to top unless ``layers`` is given) are
    fitted one at a time with the body frozen in its first pose; layer ``k``
    collides with capsules inflated by ``k * layer_offset`` and the layers
    below stay fixed. When the body has several keyframes, all layers are then
    simulated together while the pose is interpolated. ``max_steps`` caps each
    of these phases; a phase settles when the largest per-frame displacement
    drops under ``settle_tol``.
    """
    t0 = _time.perf_counter()
    if layers is None:
        layers = garment_layers(garment)
    state = build_sim(garment, body, params, pinned)
    base_w = state.inverse_masses.copy()
    layer_of_vertex = np.zeros(garment.n_vertices, dtype=np.int64)
    for k, comp in enumerate(layers):
        layer_of_vertex[np.isin(garment.panel_of_vertex, comp)] = k
    state.layer_of_vertex = layer_of_vertex
    state.layer_offset = layer_offset
    if waist_band is not None and waist_factor != 1.0:
        shrink_waist(state, waist_band, waist_factor)

    phase_steps = []
    init_passes = []
    converged = True
    state.freeze_body = True
    for k in range(len(layers)):
        state.inverse_masses = np.where(layer_of_vertex == k, base_w, 0.0)
        state.velocities[:] = 0.0
        initialize_outside(state, params)
        init_passes.append(state.init_report["passes"])
        n, ok = _settle(state, params, max_steps, settle_tol, body.end_time)
        phase_steps.append(n)
        converged &= ok
    state.inverse_masses = base_w
    if len(body.keyframes) > 1:
        state.freeze_body = False
        state.velocities[:] = 0.0
        n, ok = _settle(state, params, max_steps, settle_tol, body.end_time)
        phase_steps.append(n)
        converged &= ok

    dev = stretch_deviation(state)
    sp = state.pairs[state.stitch_slice]
    gaps = np.linalg.norm(state.positions[sp[:, 0]] - state.positions[sp[:, 1]], axis=1) if len(sp) else np.zeros(0)
    report = DrapeReport(
        converged=bool(converged),
        settle_steps=max(phase_steps) if phase_steps else 0,
        phase_steps=phase_steps,
        n_layers=len(layers),
        stretch_residual=float(dev.max()) if len(dev) else 0.0,
        mean_stretch_residual=float(dev.mean()) if len(dev) else 0.0,
        penetration=max_penetration(state, 0.0),
        stitch_gap_mean=float(gaps.mean()) if len(gaps) else 0.0,
        stitch_gap_max=float(gaps.max()) if len(gaps) else 0.0,
        mean_rest_edge=float(state.rest[state.stretch_slice].mean()) if state.n_stretch else 0.0,
        init_passes=init_passes,
        init_residual=float(max_penetration(state, params.collision_margin)),
        wall_time=_time.perf_counter() - t0,
        backend=kernels.BACKEND,
        seed=params.seed,
        n_vertices=garment.n_vertices,
    )
    return garment.with_positions(state.positions), report


def grid_cloth(nx: int = 20, ny: int = 20, size: float = 1.0, origin=(0.0, 0.0, 0.0), plane: str = "xy") -> GarmentMesh:
    """Regular ``nx`` x ``ny`` particle cloth as a one-panel garment (test and benchmark fixture).

    ``plane="xy"`` hangs vertically (+y up); ``plane="xz"`` lies horizontally.
    """
    xs = np.linspace(0.0, size, nx)
    ys = np.linspace(0.0, size * (ny - 1) / max(nx - 1, 1), ny)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    flat = np.stack([gx.ravel(), gy.ravel()], axis=1)
    pos = np.zeros((len(flat), 3))
    if plane == "xy":
        pos[:, 0], pos[:, 1] = flat[:, 0], flat[:, 1]
    elif plane == "xz":
        pos[:, 0], pos[:, 2] = flat[:, 0], -flat[:, 1]
    else:
        raise ValueError("plane must be 'xy' or 'xz'")
    pos += np.asarray(origin, dtype=float)
    tris = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            a = j * nx + i
            b, c, d = a + 1, a + nx, a + nx + 1
            tris.append((a, b, d))
            tris.append((a, d, c))
    n = len(flat)
    return GarmentMesh(
        positions=pos,
        triangles=np.asarray(tris, dtype=np.int64),
        panel_of_vertex=np.zeros(n, dtype=np.int64),
        stitch_pairs=np.zeros((0, 2), dtype=np.int64),
        rest_mesh=(),
        rest_positions=flat,
        panel_names=("cloth",),
        vertex_offsets=np.array([0, n], dtype=np.int64),
        stitched_panels=(),
        unit_scale=1.0,
    )


def tube_cloth(radius: float, height: float, n_around: int = 24, n_along: int = 10, center=(0.0, 0.0, 0.0)) -> GarmentMesh:
    """Vertical open cylinder around ``center`` (its bottom ring), built as a rectangle sewn shut.

    The rest shape is the unrolled ``2 pi radius`` x ``height`` rectangle;
    column ``n_around`` duplicates column 0 and is stitched to it.
    """
    cols = n_around + 1
    width = 2.0 * math.pi * radius
    us = np.linspace(0.0, width, cols)
    vs = np.linspace(0.0, height, n_along)
    gu, gv = np.meshgrid(us, vs, indexing="xy")
    flat = np.stack([gu.ravel(), gv.ravel()], axis=1)
    ang = flat[:, 0] / radius
    pos = np.stack([radius * np.cos(ang), flat[:, 1], -radius * np.sin(ang)], axis=1)
    pos += np.asarray(center, dtype=float)
    tris = []
    for j in range(n_along - 1):
        for i in range(cols - 1):
            a = j * cols + i
            b, c, d = a + 1, a + cols, a + cols + 1
            tris.append((a, b, d))
            tris.append((a, d, c))
    seam = [(j * cols, j * cols + n_around) for j in range(n_along)]
    n = len(flat)
    return GarmentMesh(
        positions=pos,
        triangles=np.asarray(tris, dtype=np.int64),
        panel_of_vertex=np.zeros(n, dtype=np.int64),
        stitch_pairs=np.asarray(seam, dtype=np.int64),
        rest_mesh=(),
        rest_positions=flat,
        panel_names=("tube",),
        vertex_offsets=np.array([0, n], dtype=np.int64),
        stitched_panels=(),
        unit_scale=1.0,
    )
