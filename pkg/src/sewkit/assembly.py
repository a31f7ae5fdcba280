"""Turn a sewing pattern into a positioned 3D garment mesh with stitch constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SewError
from .geometry import DEFAULT_SAMPLES_PER_CURVE, PanelMesh, triangulate_panel
from .model import Placement, SewingPattern, Stitch
from .validation import components_from_pairs, require_valid, stitch_components

CM_TO_M = 0.01


@dataclass(frozen=True)
class AssemblyOptions:
    samples_per_curve: int = DEFAULT_SAMPLES_PER_CURVE
    # maximum triangle edge in pattern units (cm)
    target_edge: float = 4.0
    unit_scale: float = CM_TO_M
    n_pairs: int = 8


@dataclass(frozen=True)
class GarmentMesh:
    """Concatenated placed panels.

    ``rest_positions`` holds each vertex's flat 2D panel coordinate already
    scaled to meters; distance constraints take their rest lengths from it.
    Vertices of panel ``i`` occupy ``vertex_offsets[i]:vertex_offsets[i + 1]``.
    """

    positions: np.ndarray
    triangles: np.ndarray
    panel_of_vertex: np.ndarray
    stitch_pairs: np.ndarray
    rest_mesh: tuple
    rest_positions: np.ndarray
    panel_names: tuple
    vertex_offsets: np.ndarray
    stitched_panels: tuple = ()
    unit_scale: float = CM_TO_M

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_panels(self) -> int:
        return len(self.panel_names)

    def with_positions(self, positions) -> "GarmentMesh":
        return GarmentMesh(
            np.array(positions, dtype=float),
            self.triangles,
            self.panel_of_vertex,
            self.stitch_pairs,
            self.rest_mesh,
            self.rest_positions,
            self.panel_names,
            self.vertex_offsets,
            self.stitched_panels,
            self.unit_scale,
        )


def rotation_matrix(r) -> np.ndarray:
    """Rodrigues rotation matrix for axis-angle vector ``r``."""
    r = np.asarray(r, dtype=float)
    theta = float(np.sqrt(r @ r))
    if theta == 0.0:
        return np.eye(3)
    k = r / theta
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + math.sin(theta) * K + (1.0 - math.cos(theta)) * (K @ K)


def place_panel(mesh: PanelMesh, placement: Placement, unit_scale: float = CM_TO_M) -> np.ndarray:
    """Lift 2D panel points to ``(x s, y s, 0)``, rotate by the axis-angle, then translate."""
    pts = np.zeros((mesh.n_points, 3))
    pts[:, :2] = mesh.points * unit_scale
    if any(placement.rotation):
        pts = pts @ rotation_matrix(placement.rotation).T
    return pts + np.asarray(placement.translation, dtype=float)


def _edge_samples(mesh: PanelMesh, edge: int, n_pairs: int) -> list:
    """Indices of the boundary points nearest to ``n_pairs`` evenly spaced arc-length fractions."""
    idx = list(mesh.boundary_edge_map[edge])
    if len(idx) < 2:
        raise SewError("DEGENERATE_STITCH", f"edge {edge} has fewer than two boundary samples")
    p = mesh.points[idx]
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(p, axis=0), axis=1))])
    if n_pairs == 1:
        fractions = np.array([0.5])
    else:
        fractions = np.arange(n_pairs) / (n_pairs - 1)
    return [idx[int(np.argmin(np.abs(s - f * s[-1])))] for f in fractions]


def build_stitch_pairs(pattern: SewingPattern, panel_meshes, placed_positions, n_pairs: int = 8) -> np.ndarray:
    """Global vertex pairs realizing every stitch.

    Each stitched edge is sampled at ``n_pairs`` arc-length fractions (snapped
    to the nearest boundary vertex). The pairing runs forward or reversed,
    whichever gives the smaller summed 3D distance; ties keep forward.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    offsets = np.concatenate([[0], np.cumsum([m.n_points for m in panel_meshes])]).astype(np.int64)
    pairs = []
    for st in pattern.stitches:
        (pa, ea), (pb, eb) = st.first, st.second
        a = _edge_samples(panel_meshes[pa], ea, n_pairs)
        b = _edge_samples(panel_meshes[pb], eb, n_pairs)
        xa = placed_positions[pa][a]
        xb = placed_positions[pb][b]
        forward = float(np.linalg.norm(xa - xb, axis=1).sum())
        reverse = float(np.linalg.norm(xa - xb[::-1], axis=1).sum())
        if reverse < forward:
            b = b[::-1]
        for i, j in zip(a, b):
            pairs.append((offsets[pa] + i, offsets[pb] + j))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def assemble_garment(pattern: SewingPattern, opts: AssemblyOptions = AssemblyOptions()) -> GarmentMesh:
    require_valid(pattern)
    meshes = [triangulate_panel(p, opts.samples_per_curve, opts.target_edge) for p in pattern.panels]
    placed = [place_panel(m, pl, opts.unit_scale) for m, pl in zip(meshes, pattern.placements)]
    counts = [m.n_points for m in meshes]
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    if meshes:
        positions = np.concatenate(placed)
        rest = np.concatenate([m.points for m in meshes]) * opts.unit_scale
        tris = np.concatenate([m.triangles + offsets[i] for i, m in enumerate(meshes)])
    else:
        positions = np.zeros((0, 3))
        rest = np.zeros((0, 2))
        tris = np.zeros((0, 3), dtype=np.int64)
    panel_of_vertex = np.repeat(np.arange(len(meshes), dtype=np.int64), counts)
    stitch_pairs = build_stitch_pairs(pattern, meshes, placed, opts.n_pairs)
    return GarmentMesh(
        positions=positions,
        triangles=tris.astype(np.int64),
        panel_of_vertex=panel_of_vertex,
        stitch_pairs=stitch_pairs,
        rest_mesh=tuple(meshes),
        rest_positions=rest,
        panel_names=tuple(p.name for p in pattern.panels),
        vertex_offsets=offsets,
        stitched_panels=tuple((st.first[0], st.second[0]) for st in pattern.stitches),
        unit_scale=opts.unit_scale,
    )


def _sort_components(components, garment: GarmentMesh) -> list:
    keyed = []
    for comp in components:
        mask = np.isin(garment.panel_of_vertex, comp)
        mean_y = float(garment.positions[mask, 1].mean()) if mask.any() else 0.0
        keyed.append((mean_y, min(comp), comp))
    keyed.sort(key=lambda k: (k[0], k[1]))
    return [k[2] for k in keyed]


def layer_order(pattern: SewingPattern, garment: GarmentMesh) -> list:
    """Stitch components sorted bottom to top by mean vertex height (+y); ties by smallest panel index."""
    return _sort_components(stitch_components(pattern), garment)


def garment_layers(garment: GarmentMesh) -> list:
    """``layer_order`` recovered from the garment alone (its stitched panel pairs)."""
    return _sort_components(components_from_pairs(garment.n_panels, garment.stitched_panels), garment)


def merge_patterns(patterns) -> tuple:
    """Concatenate per-layer patterns into one.

    Returns ``(pattern, groups)`` where ``groups[k]`` lists the merged panel
    indices that came from ``patterns[k]``; stitch indices are offset.
    """
    panels, placements, stitches, groups = [], [], [], []
    for pat in patterns:
        off = len(panels)
        groups.append(list(range(off, off + len(pat.panels))))
        panels.extend(pat.panels)
        placements.extend(pat.placements)
        stitches.extend(
            Stitch((st.first[0] + off, st.first[1]), (st.second[0] + off, st.second[1])) for st in pat.stitches
        )
    return SewingPattern(panels, placements, stitches), groups
