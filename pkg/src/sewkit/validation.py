"""Structural validation of sewing patterns."""

from __future__ import annotations

import math

from .errors import SewError
from .geometry import DEFAULT_SAMPLES_PER_CURVE, edge_arc_length, is_simple_polygon, sample_edge, shoelace
from .model import Issue, Panel, SewingPattern, ValidationReport

STITCH_LENGTH_TOLERANCE = 0.10


def panel_signed_area(panel: Panel, samples_per_curve: int = DEFAULT_SAMPLES_PER_CURVE) -> float:
    """Shoelace area of the boundary with every curved edge replaced by its sampled polyline."""
    if samples_per_curve < 2:
        raise ValueError("samples_per_curve must be >= 2")
    pts = []
    for edge in panel.edges:
        n = samples_per_curve if edge.is_curved else 1
        pts.extend(sample_edge(edge, panel, n)[:-1])
    return shoelace(pts)


def _finite(*values) -> bool:
    return all(math.isfinite(v) for v in values)


def _check_panel(i: int, panel: Panel, errors: list) -> bool:
    """Append panel-level errors; return True when the boundary is well formed enough for geometry."""
    loc = f"/panels/{i}"
    n = len(panel.vertices)
    ok = True
    for k, v in enumerate(panel.vertices):
        if not _finite(*v):
            errors.append(Issue("NONFINITE_VALUE", f"{loc}/vertices/{k}", "vertex coordinate is not finite"))
            ok = False
    if n < 3:
        errors.append(Issue("TOO_FEW_VERTICES", f"{loc}/vertices", f"panel has {n} vertices, need at least 3"))
        return False
    if len(panel.edges) != n:
        errors.append(Issue("EDGE_COUNT_MISMATCH", f"{loc}/edges", f"{len(panel.edges)} edges for {n} vertices"))
        return False
    for j, e in enumerate(panel.edges):
        eloc = f"{loc}/edges/{j}"
        if not (0 <= e.from_vertex < n and 0 <= e.to_vertex < n):
            errors.append(Issue("EDGE_INDEX_OUT_OF_RANGE", eloc, "edge references a missing vertex"))
            ok = False
            continue
        if e.from_vertex == e.to_vertex:
            errors.append(Issue("DEGENERATE_EDGE", eloc, "edge starts and ends at the same vertex"))
            ok = False
        elif panel.vertices[e.from_vertex] == panel.vertices[e.to_vertex]:
            errors.append(Issue("DEGENERATE_EDGE", eloc, "edge endpoints coincide"))
            ok = False
        if e.from_vertex != j or e.to_vertex != (j + 1) % n:
            errors.append(Issue("BROKEN_CHAIN", eloc, f"edge {j} must run from vertex {j} to vertex {(j + 1) % n}"))
            ok = False
        if e.control is not None and not _finite(*e.control):
            errors.append(Issue("NONFINITE_VALUE", f"{eloc}/control", "control point is not finite"))
            ok = False
    if not ok:
        return False
    pts = []
    for edge in panel.edges:
        pts.extend(sample_edge(edge, panel, DEFAULT_SAMPLES_PER_CURVE if edge.is_curved else 1)[:-1])
    if not is_simple_polygon(pts):
        errors.append(Issue("NON_SIMPLE_POLYGON", loc, "discretized boundary self-intersects"))
        return False
    area = shoelace(pts)
    if area <= 0:
        errors.append(Issue("NEGATIVE_AREA", loc, f"signed area {area!r}; boundary must be counter-clockwise"))
        return False
    return True


def validate_pattern(pattern: SewingPattern) -> ValidationReport:
    """Check every structural invariant of ``pattern``.

    Problems are collected, never raised. Stitched edges whose arc lengths
    differ by more than 10% produce a ``STITCH_LENGTH_MISMATCH`` warning.
    """
    errors: list = []
    warnings: list = []
    panel_ok = [_check_panel(i, p, errors) for i, p in enumerate(pattern.panels)]

    if len(pattern.placements) != len(pattern.panels):
        errors.append(
            Issue(
                "PLACEMENT_COUNT_MISMATCH",
                "/placements",
                f"{len(pattern.placements)} placements for {len(pattern.panels)} panels",
            )
        )
    for i, pl in enumerate(pattern.placements):
        if not pl.is_finite():
            errors.append(Issue("NONFINITE_VALUE", f"/panels/{i}/placement", "placement is not finite"))
        elif pl.angle > math.pi:
            warnings.append(
                Issue("ROTATION_NOT_CANONICAL", f"/panels/{i}/rotation", "rotation angle exceeds pi", "warning")
            )

    used: dict = {}
    for s_idx, st in enumerate(pattern.stitches):
        loc = f"/stitches/{s_idx}"
        in_range = True
        for side in (st.first, st.second):
            p, e = side
            if not (0 <= p < len(pattern.panels)) or not (0 <= e < len(pattern.panels[p].edges)):
                errors.append(Issue("STITCH_INDEX_OUT_OF_RANGE", loc, f"stitch {s_idx} references missing edge {side}"))
                in_range = False
        if not in_range:
            continue
        if st.first[0] == st.second[0]:
            errors.append(Issue("SAME_PANEL_STITCH", loc, f"stitch {s_idx} joins two edges of panel {st.first[0]}"))
        for side in (st.first, st.second):
            if side in used:
                errors.append(
                    Issue("DUPLICATE_STITCH_EDGE", loc, f"edge {side} already used by stitch {used[side]}")
                )
            else:
                used[side] = s_idx
        if panel_ok[st.first[0]] and panel_ok[st.second[0]]:
            pa = pattern.panels[st.first[0]]
            pb = pattern.panels[st.second[0]]
            la = edge_arc_length(pa.edges[st.first[1]], pa, tol=1e-9)
            lb = edge_arc_length(pb.edges[st.second[1]], pb, tol=1e-9)
            if abs(la - lb) > STITCH_LENGTH_TOLERANCE * max(la, lb):
                warnings.append(
                    Issue(
                        "STITCH_LENGTH_MISMATCH",
                        loc,
                        f"stitched edge lengths {la:.4g} and {lb:.4g} differ by more than 10%",
                        "warning",
                    )
                )
    return ValidationReport(tuple(errors), tuple(warnings))


def require_valid(pattern: SewingPattern) -> None:
    """Raise ``SewError`` with the first validation error, if any."""
    report = validate_pattern(pattern)
    if report.errors:
        first = report.errors[0]
        raise SewError(first.code, first.message, first.location)


def components_from_pairs(n: int, pairs) -> list:
    """Connected components of ``range(n)`` under the undirected ``pairs``, ordered by smallest member."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [sorted(g) for _, g in sorted(groups.items(), key=lambda kv: min(kv[1]))]


def stitch_components(pattern: SewingPattern) -> list:
    """Panel-index groups connected by stitches, ordered by smallest panel index."""
    pairs = [(st.first[0], st.second[0]) for st in pattern.stitches]
    return components_from_pairs(len(pattern.panels), pairs)
