"""Panel geometry: quadratic Bezier edges, boundary sampling and triangulation."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import SewError
from .model import EdgeSpec, Panel, Point2

DEFAULT_SAMPLES_PER_CURVE = 16


def control_to_absolute(v_s, v_e, c_rel) -> Point2:
    """Convert an edge-frame control point to panel coordinates.

    The frame origin is ``v_s``; the first axis is the chord ``v_e - v_s`` and
    the second axis is the chord rotated by +90 degrees.
    """
    dx = v_e[0] - v_s[0]
    dy = v_e[1] - v_s[1]
    if dx == 0.0 and dy == 0.0:
        raise SewError("DEGENERATE_EDGE", "edge endpoints coincide")
    cx, cy = c_rel
    return Point2(v_s[0] + cx * dx - cy * dy, v_s[1] + cx * dy + cy * dx)


def bezier_point(v_s, c_abs, v_e, t: float) -> Point2:
    if not 0.0 <= t <= 1.0:
        raise SewError("PARAM_OUT_OF_RANGE", f"t={t!r} outside [0, 1]")
    u = 1.0 - t
    a = u * u
    b = 2.0 * u * t
    c = t * t
    return Point2(a * v_s[0] + b * c_abs[0] + c * v_e[0], a * v_s[1] + b * c_abs[1] + c * v_e[1])


def edge_control_absolute(edge: EdgeSpec, panel: Panel):
    """Absolute control point of ``edge`` or ``None`` for a straight edge."""
    if edge.control is None:
        return None
    return control_to_absolute(panel.vertices[edge.from_vertex], panel.vertices[edge.to_vertex], edge.control)


def sample_edge(edge: EdgeSpec, panel: Panel, n: int) -> list:
    """Return ``n + 1`` points at uniform ``t = k / n``; endpoints are the panel vertices themselves."""
    if n < 1:
        raise ValueError("n must be >= 1")
    v_s = panel.vertices[edge.from_vertex]
    v_e = panel.vertices[edge.to_vertex]
    if v_s == v_e:
        raise SewError("DEGENERATE_EDGE", "edge endpoints coincide")
    c = edge_control_absolute(edge, panel)
    pts = [v_s]
    for k in range(1, n):
        t = k / n
        if c is None:
            pts.append(Point2(v_s[0] + t * (v_e[0] - v_s[0]), v_s[1] + t * (v_e[1] - v_s[1])))
        else:
            pts.append(bezier_point(v_s, c, v_e, t))
    pts.append(v_e)
    return pts


def polyline_length(pts) -> float:
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:]))


def _curve_length(v_s, c, v_e, n: int) -> float:
    t = np.arange(n + 1, dtype=float) / n
    u = 1.0 - t
    a, b, cc = u * u, 2.0 * u * t, t * t
    x = a * v_s[0] + b * c[0] + cc * v_e[0]
    y = a * v_s[1] + b * c[1] + cc * v_e[1]
    return float(np.hypot(np.diff(x), np.diff(y)).sum())


def edge_arc_length(edge: EdgeSpec, panel: Panel, tol: float = 1e-9, max_segments: int = 1 << 22) -> float:
    """Polyline length refined by doubling until successive estimates differ by less than ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    v_s = panel.vertices[edge.from_vertex]
    v_e = panel.vertices[edge.to_vertex]
    if edge.control is None:
        return math.hypot(v_e[0] - v_s[0], v_e[1] - v_s[1])
    c = edge_control_absolute(edge, panel)
    n = 2
    prev = _curve_length(v_s, c, v_e, n)
    while n < max_segments:
        n *= 2
        cur = _curve_length(v_s, c, v_e, n)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


def shoelace(pts) -> float:
    """Signed area of a closed polygon given as a sequence of points (positive = CCW)."""
    n = len(pts)
    s = 0.0
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _on_segment(p, a, b) -> bool:
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection test (touching counts)."""
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(p1, q1, q2):
        return True
    if d2 == 0 and _on_segment(p2, q1, q2):
        return True
    if d3 == 0 and _on_segment(q1, p1, p2):
        return True
    if d4 == 0 and _on_segment(q2, p1, p2):
        return True
    return False


def is_simple_polygon(pts) -> bool:
    n = len(pts)
    if n < 3:
        return False
    if len(set(map(tuple, pts))) != n:
        return False
    # adjacent segments may only share their common vertex
    for i in range(n):
        a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
        if _cross(a, b, c) == 0.0 and (a[0] - b[0]) * (c[0] - b[0]) + (a[1] - b[1]) * (c[1] - b[1]) > 0:
            return False
    if n == 3:
        return True
    arr = np.asarray(pts, dtype=float)
    lo = np.minimum(arr, np.roll(arr, -1, axis=0))
    hi = np.maximum(arr, np.roll(arr, -1, axis=0))
    for i in range(n):
        # bounding-box prefilter over the non-adjacent segments j > i + 1
        js = np.arange(i + 2, n if i > 0 else n - 1)
        if js.size == 0:
            continue
        hit = js[
            (lo[js, 0] <= hi[i, 0]) & (hi[js, 0] >= lo[i, 0]) & (lo[js, 1] <= hi[i, 1]) & (hi[js, 1] >= lo[i, 1])
        ]
        for j in hit:
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]):
                return False
    return True


@dataclass(frozen=True)
class PanelMesh:
    """Triangulated panel in 2D pattern units.

    ``points[:n_boundary]`` is the boundary loop in order; interior points
    follow. ``boundary_edge_map[j]`` lists the point indices produced by edge
    ``j`` from its start vertex to its end vertex (both included).
    """

    points: np.ndarray
    triangles: np.ndarray
    boundary_edge_map: tuple
    n_boundary: int

    @property
    def n_points(self) -> int:
        return len(self.points)

    def triangle_areas(self) -> np.ndarray:
        p = self.points
        a, b, c = p[self.triangles[:, 0]], p[self.triangles[:, 1]], p[self.triangles[:, 2]]
        return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    def edge_lengths(self) -> np.ndarray:
        p = self.points
        t = self.triangles
        return np.concatenate([np.linalg.norm(p[t[:, i]] - p[t[:, (i + 1) % 3]], axis=1) for i in range(3)])


def _edge_segment_count(edge, panel, samples_per_curve, target_edge):
    n = samples_per_curve if edge.is_curved else 1
    if math.isfinite(target_edge):
        length = edge_arc_length(edge, panel, tol=1e-6 * target_edge)
        n = max(n, math.ceil(length / target_edge))
        while True:
            pts = sample_edge(edge, panel, n)
            if max(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:])) <= target_edge:
                break
            n += max(1, n // 8)
    return n


def boundary_polygon(panel: Panel, samples_per_curve: int = DEFAULT_SAMPLES_PER_CURVE, target_edge: float = math.inf):
    """Discretize the panel boundary.

    Curved edges get ``samples_per_curve`` uniform-t segments, straight edges
    one; both are subdivided further (still uniformly in t) when a segment
    would exceed ``target_edge``. Returns ``(points, boundary_edge_map)``.
    """
    if samples_per_curve < 1:
        raise ValueError("samples_per_curve must be >= 1")
    pts = []
    edge_map = []
    n_edges = len(panel.edges)
    for j, edge in enumerate(panel.edges):
        n = _edge_segment_count(edge, panel, samples_per_curve, target_edge)
        samples = sample_edge(edge, panel, n)
        start = len(pts)
        pts.extend(samples[:-1])
        idx = list(range(start, start + n))
        idx.append(0 if j == n_edges - 1 else start + n)
        edge_map.append(tuple(idx))
    return pts, tuple(edge_map)


def panel_boundary_points(panel: Panel, samples_per_curve: int = DEFAULT_SAMPLES_PER_CURVE) -> list:
    return boundary_polygon(panel, samples_per_curve)[0]


def ear_clip(pts) -> list:
    """Ear-clipping triangulation of a simple counter-clockwise polygon.

    Returns ``len(pts) - 2`` index triples. The clipped ear is always the best
    shaped one available (ties to the lowest index), which keeps the result
    deterministic and avoids needle triangles where possible. Zero-area ears
    are never clipped.
    """
    n = len(pts)
    if n < 3:
        raise SewError("NON_SIMPLE_POLYGON", "fewer than three boundary points")
    if n == 3:
        if _cross(pts[0], pts[1], pts[2]) <= 0:
            raise SewError("NON_SIMPLE_POLYGON", "degenerate or clockwise triangle")
        return [(0, 1, 2)]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    span = max(max(xs) - min(xs), max(ys) - min(ys))
    eps = 1e-14 * span * span
    prev = [(i - 1) % n for i in range(n)]
    nxt = [(i + 1) % n for i in range(n)]
    alive = [True] * n

    def convex(i):
        return _cross(pts[prev[i]], pts[i], pts[nxt[i]]) > eps

    # only non-convex vertices can sit inside an ear of a simple polygon
    nonconvex = {i for i in range(n) if not convex(i)}

    def score(i):
        a, b = prev[i], nxt[i]
        pa, pi, pb = pts[a], pts[i], pts[b]
        area2 = _cross(pa, pi, pb)
        if area2 <= eps:
            return None
        for j in nonconvex:
            if j == a or j == b or j == i:
                continue
            pj = pts[j]
            # inclusive with tolerance: a boundary point lying on the diagonal must block the ear
            if _cross(pa, pi, pj) >= -eps and _cross(pi, pb, pj) >= -eps and _cross(pb, pa, pj) >= -eps:
                return None
        l2 = (
            (pi[0] - pa[0]) ** 2 + (pi[1] - pa[1]) ** 2
            + (pb[0] - pi[0]) ** 2 + (pb[1] - pi[1]) ** 2
            + (pa[0] - pb[0]) ** 2 + (pa[1] - pb[1]) ** 2
        )
        return area2 / l2

    scores = [score(i) for i in range(n)]
    tris = []
    remaining = n
    while remaining > 3:
        best = -1
        best_s = -1.0
        for i in range(n):
            s = scores[i]
            if alive[i] and s is not None and s > best_s:
                best, best_s = i, s
        if best < 0:
            raise SewError("NON_SIMPLE_POLYGON", "no valid ear left; boundary is not a simple polygon")
        a, b = prev[best], nxt[best]
        tris.append((a, best, b))
        alive[best] = False
        scores[best] = None
        nonconvex.discard(best)
        nxt[a] = b
        prev[b] = a
        remaining -= 1
        unblocked = False
        for v in (a, b):
            if v in nonconvex and convex(v):
                nonconvex.discard(v)
                unblocked = True
        scores[a] = score(a)
        scores[b] = score(b)
        if unblocked:
            for i in range(n):
                if alive[i] and scores[i] is None and convex(i):
                    scores[i] = score(i)
    a = next(i for i in range(n) if alive[i])
    last = (prev[a], a, nxt[a])
    if _cross(pts[last[0]], pts[last[1]], pts[last[2]]) <= eps:
        raise SewError("NON_SIMPLE_POLYGON", "final ear is degenerate")
    tris.append(last)
    return tris


def refine_longest_edge(points: list, triangles: list, target_edge: float, n_boundary: int):
    """Bisect interior edges, longest first, until no interior edge exceeds ``target_edge``.

    Both triangles sharing a bisected edge are split at its midpoint, so the
    mesh stays conforming and the total area is unchanged. New points are
    appended to ``points``.
    """
    points = [tuple(p) for p in points]
    tris = [list(t) for t in triangles]
    edge_tris: dict = {}

    def key(u, v):
        return (u, v) if u < v else (v, u)

    def length(k):
        p, q = points[k[0]], points[k[1]]
        return math.hypot(q[0] - p[0], q[1] - p[1])

    heap = []

    def add_tri(t_id):
        t = tris[t_id]
        for i in range(3):
            k = key(t[i], t[(i + 1) % 3])
            edge_tris.setdefault(k, []).append(t_id)

    def push_if_long(k):
        if len(edge_tris.get(k, ())) == 2:
            L = length(k)
            if L > target_edge:
                heapq.heappush(heap, (-L, k))

    for t_id in range(len(tris)):
        add_tri(t_id)
    for k in sorted(edge_tris):
        push_if_long(k)

    while heap:
        negL, k = heapq.heappop(heap)
        owners = edge_tris.get(k)
        if not owners or len(owners) != 2:
            continue
        u, v = k
        pu, pv = points[u], points[v]
        m = len(points)
        points.append((0.5 * (pu[0] + pv[0]), 0.5 * (pu[1] + pv[1])))
        del edge_tris[k]
        touched = []
        for t_id in owners:
            t = tris[t_id]
            # rotate so the split edge is (t[0], t[1]), keeping orientation
            while key(t[0], t[1]) != k:
                t = [t[1], t[2], t[0]]
            p, q, w = t
            for e in (key(q, w), key(w, p)):
                edge_tris[e].remove(t_id)
            tris[t_id] = [p, m, w]
            tris.append([m, q, w])
            add_tri_ids = (t_id, len(tris) - 1)
            for tid in add_tri_ids:
                add_tri(tid)
            touched.extend(add_tri_ids)
        for tid in touched:
            t = tris[tid]
            for i in range(3):
                push_if_long(key(t[i], t[(i + 1) % 3]))
    return points, [tuple(t) for t in tris]


def triangulate_panel(
    panel: Panel,
    samples_per_curve: int = DEFAULT_SAMPLES_PER_CURVE,
    target_edge: float = math.inf,
) -> PanelMesh:
    """Triangulate a panel: sampled boundary, ear clipping, then longest-edge refinement.

    With a finite ``target_edge`` the boundary is also sampled finely enough
    that no boundary segment exceeds it, so every output edge respects the
    bound.
    """
    if not target_edge > 0:
        raise ValueError("target_edge must be positive")
    pts, edge_map = boundary_polygon(panel, samples_per_curve, target_edge)
    if not is_simple_polygon(pts):
        raise SewError("NON_SIMPLE_POLYGON", f"boundary of panel {panel.name!r} self-intersects")
    if shoelace(pts) <= 0:
        raise SewError("NEGATIVE_AREA", f"panel {panel.name!r} is not counter-clockwise")
    tris = ear_clip(pts)
    n_boundary = len(pts)
    if math.isfinite(target_edge):
        pts, tris = refine_longest_edge(pts, tris, target_edge, n_boundary)
    return PanelMesh(
        points=np.asarray(pts, dtype=float).reshape(-1, 2),
        triangles=np.asarray(tris, dtype=np.int64).reshape(-1, 3),
        boundary_edge_map=edge_map,
        n_boundary=n_boundary,
    )
