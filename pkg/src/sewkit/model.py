"""Core value types for parametric sewing patterns.

All types are frozen dataclasses holding tuples, so patterns are hashable,
comparable with ``==`` and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence


class Point2(NamedTuple):
    x: float
    y: float


def _pt(p) -> Point2:
    return Point2(float(p[0]), float(p[1]))


@dataclass(frozen=True)
class EdgeSpec:
    """Boundary edge ``from_vertex -> to_vertex`` of a panel.

    ``control`` is the quadratic Bezier control point in the edge frame:
    ``x`` runs along the chord (0 at the start vertex, 1 at the end vertex)
    and ``y`` along the chord rotated by +90 degrees, in chord lengths.
    ``None`` means a straight segment.
    """

    from_vertex: int
    to_vertex: int
    control: Optional[Point2] = None

    def __post_init__(self):
        if self.control is not None and not isinstance(self.control, Point2):
            object.__setattr__(self, "control", _pt(self.control))

    @property
    def is_curved(self) -> bool:
        return self.control is not None


@dataclass(frozen=True)
class Panel:
    name: str
    vertices: tuple
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(_pt(v) for v in self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))

    @classmethod
    def from_polygon(cls, name: str, vertices: Sequence, controls: Optional[Sequence] = None) -> "Panel":
        """Build a panel whose edge ``k`` joins vertex ``k`` to vertex ``k+1``.

        ``controls`` optionally gives one relative control point (or ``None``)
        per edge.
        """
        n = len(vertices)
        controls = controls if controls is not None else [None] * n
        if len(controls) != n:
            raise ValueError("need one control entry per edge")
        edges = tuple(EdgeSpec(k, (k + 1) % n, controls[k]) for k in range(n))
        return cls(name, vertices, edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class Placement:
    """Rigid placement: axis-angle ``rotation`` (radians) and ``translation`` (meters)."""

    rotation: tuple = (0.0, 0.0, 0.0)
    translation: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "rotation", tuple(float(v) for v in self.rotation))
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))
        if len(self.rotation) != 3 or len(self.translation) != 3:
            raise ValueError("rotation and translation must be 3-vectors")

    @property
    def angle(self) -> float:
        return math.sqrt(sum(v * v for v in self.rotation))

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.rotation + self.translation)

    def canonicalized(self) -> "Placement":
        """Return the equivalent placement with rotation angle in ``[0, pi]``."""
        theta = self.angle
        if theta <= math.pi or not math.isfinite(theta):
            return self
        wrapped = math.remainder(theta, 2.0 * math.pi)  # in [-pi, pi]
        scale = wrapped / theta
        return Placement(tuple(v * scale for v in self.rotation), self.translation)


@dataclass(frozen=True)
class Stitch:
    """Pairs edge ``first = (panel, edge)`` with edge ``second``."""

    first: tuple
    second: tuple

    def __post_init__(self):
        object.__setattr__(self, "first", (int(self.first[0]), int(self.first[1])))
        object.__setattr__(self, "second", (int(self.second[0]), int(self.second[1])))


@dataclass(frozen=True)
class SewingPattern:
    panels: tuple = ()
    placements: tuple = ()
    stitches: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "panels", tuple(self.panels))
        object.__setattr__(self, "placements", tuple(self.placements))
        object.__setattr__(self, "stitches", tuple(self.stitches))

    @property
    def n_panels(self) -> int:
        return len(self.panels)

    def edge_endpoints(self, panel_index: int, edge_index: int) -> tuple:
        panel = self.panels[panel_index]
        edge = panel.edges[edge_index]
        return panel.vertices[edge.from_vertex], panel.vertices[edge.to_vertex]


@dataclass(frozen=True)
class Issue:
    code: str
    location: str
    message: str = ""
    severity: str = "error"

    def to_dict(self) -> dict:
        return {"code": self.code, "location": self.location, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple = ()
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list:
        return [i.code for i in self.errors]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": [i.to_dict() for i in self.errors],
            "warnings": [i.to_dict() for i in self.warnings],
        }

