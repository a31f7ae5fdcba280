"""Pattern file parsing/serialization plus SVG and OBJ export.

The pattern wire format is a versioned JSON document::

    {
      "version": 1,
      "metadata": {"category": "skirt"},
      "panels": [
        {"name": "front",
         "vertices": [[x, y], ...],
         "edges": [{"from": 0, "to": 1, "control": [cx, cy]}, ...],
         "rotation": [rx, ry, rz],
         "translation": [tx, ty, tz]}
      ],
      "stitches": [[[panel, edge], [panel, edge]], ...]
    }

``control`` is optional (absent = straight edge). Serialization is canonical:
fixed key order, shortest round-trip float repr, two-space indent, LF endings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import SewError
from .geometry import DEFAULT_SAMPLES_PER_CURVE, edge_control_absolute, sample_edge
from .model import EdgeSpec, Panel, Placement, SewingPattern, Stitch

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PatternDocument:
    version: int
    pattern: SewingPattern
    metadata: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, PatternDocument):
            return NotImplemented
        return self.version == other.version and self.pattern == other.pattern and self.metadata == other.metadata

    def __hash__(self):
        return hash((self.version, self.pattern, tuple(sorted(self.metadata.items()))))


# --------------------------------------------------------------------- parsing


def _reject_constant(name):
    raise ValueError(f"non-standard JSON constant {name}")


def _schema(path: str, msg: str):
    return SewError("SCHEMA_VIOLATION", msg, path)


def _obj(value, path, required, optional=()):
    if not isinstance(value, dict):
        raise _schema(path, "expected an object")
    for key in required:
        if key not in value:
            raise _schema(f"{path}/{key}", f"missing required field {key!r}")
    extra = set(value) - set(required) - set(optional)
    if extra:
        key = sorted(extra)[0]
        raise _schema(f"{path}/{key}", f"unknown field {key!r}")
    return value


def _num(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _schema(path, "expected a number")
    return float(value)


def _int(value, path) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _schema(path, "expected an integer")
    return value


def _vec(value, n, path) -> tuple:
    if not isinstance(value, list) or len(value) != n:
        raise _schema(path, f"expected an array of {n} numbers")
    return tuple(_num(v, f"{path}/{i}") for i, v in enumerate(value))


def _list(value, path) -> list:
    if not isinstance(value, list):
        raise _schema(path, "expected an array")
    return value


def _parse_panel(raw, path):
    _obj(raw, path, ("name", "vertices", "edges", "rotation", "translation"))
    if not isinstance(raw["name"], str):
        raise _schema(f"{path}/name", "expected a string")
    vertices = [_vec(v, 2, f"{path}/vertices/{k}") for k, v in enumerate(_list(raw["vertices"], f"{path}/vertices"))]
    edges = []
    for j, e in enumerate(_list(raw["edges"], f"{path}/edges")):
        ep = f"{path}/edges/{j}"
        _obj(e, ep, ("from", "to"), ("control",))
        control = _vec(e["control"], 2, f"{ep}/control") if "control" in e else None
        edges.append(EdgeSpec(_int(e["from"], f"{ep}/from"), _int(e["to"], f"{ep}/to"), control))
    placement = Placement(_vec(raw["rotation"], 3, f"{path}/rotation"), _vec(raw["translation"], 3, f"{path}/translation"))
    return Panel(raw["name"], vertices, edges), placement


def _parse_stitch(raw, path):
    if not isinstance(raw, list) or len(raw) != 2:
        raise _schema(path, "expected [[panel, edge], [panel, edge]]")
    sides = []
    for k, side in enumerate(raw):
        if not isinstance(side, list) or len(side) != 2:
            raise _schema(f"{path}/{k}", "expected [panel, edge]")
        sides.append((_int(side[0], f"{path}/{k}/0"), _int(side[1], f"{path}/{k}/1")))
    return Stitch(sides[0], sides[1])


def parse_pattern(data) -> PatternDocument:
    """Parse pattern JSON (``str`` or UTF-8 ``bytes``) into a document.

    Raises ``SewError`` with code ``MALFORMED_JSON``, ``SCHEMA_VIOLATION``
    (``location`` is the JSON pointer of the offending field) or
    ``VERSION_UNSUPPORTED``. Geometric validity is checked separately by
    :func:`sewkit.validation.validate_pattern`.
    """
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SewError("MALFORMED_JSON", f"not UTF-8: {exc}") from None
    try:
        raw = json.loads(data, parse_constant=_reject_constant)
    except (json.JSONDecodeError, ValueError) as exc:
        raise SewError("MALFORMED_JSON", str(exc)) from None

    _obj(raw, "", ("version", "panels", "stitches"), ("metadata",))
    version = _int(raw["version"], "/version")
    if version != FORMAT_VERSION:
        raise SewError("VERSION_UNSUPPORTED", f"pattern format version {version} is not supported", "/version")
    metadata = raw.get("metadata", {})
    if not isinstance(metadata, dict):
        raise _schema("/metadata", "expected an object")
    for k, v in metadata.items():
        if not isinstance(v, str):
            raise _schema(f"/metadata/{k}", "metadata values must be strings")

    panels, placements = [], []
    for i, p in enumerate(_list(raw["panels"], "/panels")):
        panel, placement = _parse_panel(p, f"/panels/{i}")
        panels.append(panel)
        placements.append(placement)
    stitches = [_parse_stitch(s, f"/stitches/{i}") for i, s in enumerate(_list(raw["stitches"], "/stitches"))]
    return PatternDocument(version, SewingPattern(panels, placements, stitches), dict(metadata))


def read_pattern(path) -> PatternDocument:
    try:
        with open(path, "rb") as fh:
            return parse_pattern(fh.read())
    except FileNotFoundError:
        raise SewError("FILE_NOT_FOUND", f"no such file: {path}") from None


# --------------------------------------------------------------- serialization


def format_number(x: float) -> str:
    """Shortest decimal that round-trips to ``x`` exactly."""
    if not math.isfinite(x):
        raise SewError("NONFINITE_VALUE", f"cannot serialize {x!r}")
    return repr(float(x))


def _arr(values) -> str:
    return "[" + ", ".join(format_number(v) for v in values) + "]"


def _str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def serialize_pattern(doc: PatternDocument) -> str:
    """Canonical, byte-deterministic JSON text for ``doc``."""
    pat = doc.pattern
    if len(pat.placements) != len(pat.panels):
        raise SewError("SCHEMA_VIOLATION", "one placement per panel is required", "/panels")
    out = ["{", f'  "version": {int(doc.version)},']
    meta = doc.metadata or {}
    if meta:
        out.append('  "metadata": {')
        items = sorted(meta.items())
        for n, (k, v) in enumerate(items):
            out.append(f"    {_str(k)}: {_str(v)}" + ("," if n + 1 < len(items) else ""))
        out.append("  },")
    else:
        out.append('  "metadata": {},')
    if not pat.panels:
        out.append('  "panels": [],')
    else:
        out.append('  "panels": [')
        for i, (panel, pl) in enumerate(zip(pat.panels, pat.placements)):
            out.append("    {")
            out.append(f'      "name": {_str(panel.name)},')
            out.append('      "vertices": [' + ", ".join(_arr(v) for v in panel.vertices) + "],")
            out.append('      "edges": [')
            for j, e in enumerate(panel.edges):
                s = f'        {{"from": {int(e.from_vertex)}, "to": {int(e.to_vertex)}'
                if e.control is not None:
                    s += f', "control": {_arr(e.control)}'
                s += "}" + ("," if j + 1 < len(panel.edges) else "")
                out.append(s)
            out.append("      ],")
            out.append(f'      "rotation": {_arr(pl.rotation)},')
            out.append(f'      "translation": {_arr(pl.translation)}')
            out.append("    }" + ("," if i + 1 < len(pat.panels) else ""))
        out.append("  ],")
    if not pat.stitches:
        out.append('  "stitches": []')
    else:
        out.append('  "stitches": [')
        for i, st in enumerate(pat.stitches):
            s = f"    [[{st.first[0]}, {st.first[1]}], [{st.second[0]}, {st.second[1]}]]"
            out.append(s + ("," if i + 1 < len(pat.stitches) else ""))
        out.append("  ]")
    out.append("}")
    return "\n".join(out) + "\n"


def write_pattern(doc: PatternDocument, path) -> None:
    text = serialize_pattern(doc)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ------------------------------------------------------------------ SVG export


@dataclass(frozen=True)
class SvgOptions:
    samples_per_curve: int = DEFAULT_SAMPLES_PER_CURVE
    margin: float = 5.0
    # maximum row width in pattern units before wrapping; None keeps one row
    row_packing: Optional[float] = None


def _svg_num(x: float) -> str:
    s = format_number(x)
    return s[:-2] if s.endswith(".0") else s


def panel_bbox(panel: Panel, samples_per_curve: int = DEFAULT_SAMPLES_PER_CURVE) -> tuple:
    xs, ys = [], []
    for e in panel.edges:
        for p in sample_edge(e, panel, samples_per_curve if e.is_curved else 1):
            xs.append(p[0])
            ys.append(p[1])
    return min(xs), min(ys), max(xs), max(ys)


def svg_layout(pattern: SewingPattern, opts: SvgOptions = SvgOptions()) -> list:
    """Per-panel ``(tx, ty, bbox)`` in SVG coordinates.

    A panel point ``(x, y)`` lands at ``(x + tx, ty - y)``; ``bbox`` is the
    panel's ``(xmin, ymin, xmax, ymax)`` after that transform.
    """
    out = []
    cursor_x = opts.margin
    row_top = opts.margin
    row_height = 0.0
    for panel in pattern.panels:
        x0, y0, x1, y1 = panel_bbox(panel, opts.samples_per_curve)
        w, h = x1 - x0, y1 - y0
        if opts.row_packing is not None and cursor_x > opts.margin and cursor_x + w > opts.row_packing:
            cursor_x = opts.margin
            row_top += row_height + opts.margin
            row_height = 0.0
        tx = cursor_x - x0
        ty = row_top + y1
        out.append((tx, ty, (cursor_x, row_top, cursor_x + w, row_top + h)))
        cursor_x += w + opts.margin
        row_height = max(row_height, h)
    return out


def panel_path_data(panel: Panel) -> str:
    """Path data in panel coordinates: ``M``/``L`` for straight edges, ``Q`` for curved ones."""
    v0 = panel.vertices[panel.edges[0].from_vertex] if panel.edges else panel.vertices[0]
    parts = [f"M {_svg_num(v0[0])} {_svg_num(v0[1])}"]
    for k, e in enumerate(panel.edges):
        end = panel.vertices[e.to_vertex]
        closing = k == len(panel.edges) - 1 and e.to_vertex == panel.edges[0].from_vertex
        if e.control is None:
            if not closing:
                parts.append(f"L {_svg_num(end[0])} {_svg_num(end[1])}")
        else:
            c = edge_control_absolute(e, panel)
            parts.append(f"Q {_svg_num(c[0])} {_svg_num(c[1])} {_svg_num(end[0])} {_svg_num(end[1])}")
    parts.append("Z")
    return " ".join(parts)


def export_svg(pattern: SewingPattern, opts: SvgOptions = SvgOptions()) -> str:
    layout = svg_layout(pattern, opts)
    if layout:
        width = max(b[2] for _, _, b in layout) + opts.margin
        height = max(b[3] for _, _, b in layout) + opts.margin
    else:
        width = height = 2 * opts.margin
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {_svg_num(width)} {_svg_num(height)}" '
        f'width="{_svg_num(width)}cm" height="{_svg_num(height)}cm">',
    ]
    for panel, (tx, ty, _) in zip(pattern.panels, layout):
        name = json.dumps(panel.name)[1:-1].replace("&", "&amp;").replace("<", "&lt;").replace('"', "&quot;")
        lines.append(f'  <g id="{name}" transform="translate({_svg_num(tx)} {_svg_num(ty)}) scale(1 -1)">')
        lines.append(
            f'    <path d="{panel_path_data(panel)}" fill="none" stroke="black" '
            'stroke-width="0.2" vector-effect="non-scaling-stroke"/>'
        )
        lines.append("  </g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ OBJ export


def export_obj(mesh) -> str:
    """Wavefront OBJ with one ``g`` group per panel and 1-based face indices."""
    if len(mesh.positions) == 0:
        raise SewError("EMPTY_MESH", "mesh has no vertices")
    lines = ["# sewkit garment mesh"]
    for p in mesh.positions:
        lines.append(f"v {format_number(p[0])} {format_number(p[1])} {format_number(p[2])}")
    panel_of_tri = mesh.panel_of_vertex[mesh.triangles[:, 0]] if len(mesh.triangles) else []
    for pi, name in enumerate(mesh.panel_names):
        lines.append("g " + ("_".join(name.split()) or f"panel_{pi}"))
        for t, owner in zip(mesh.triangles, panel_of_tri):
            if owner == pi:
                lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    return "\n".join(lines) + "\n"
