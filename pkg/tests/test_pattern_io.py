import json
import math
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_files, random_pattern
from sewkit.assembly import AssemblyOptions, assemble_garment
from sewkit.errors import SewError
from sewkit.geometry import control_to_absolute
from sewkit.model import Panel, Placement, SewingPattern
from sewkit.pattern_io import (
    PatternDocument,
    export_obj,
    export_svg,
    panel_path_data,
    parse_pattern,
    read_pattern,
    serialize_pattern,
    svg_layout,
)
from sewkit.validation import validate_pattern

SVG_NS = "{http://www.w3.org/2000/svg}"

TRIANGLE_DOC = {
    "version": 1,
    "panels": [
        {
            "name": "tri",
            "vertices": [[0, 0], [10, 0], [0, 10]],
            "edges": [{"from": 0, "to": 1}, {"from": 1, "to": 2}, {"from": 2, "to": 0}],
            "rotation": [0, 0, 0],
            "translation": [0, 1, 0],
        }
    ],
    "stitches": [],
}


def doc_text(**changes):
    d = json.loads(json.dumps(TRIANGLE_DOC))
    d.update(changes)
    return json.dumps(d)


def error_of(text):
    with pytest.raises(SewError) as e:
        parse_pattern(text)
    return e.value


def test_minimal_triangle():
    doc = parse_pattern(doc_text())
    assert doc.pattern.n_panels == 1
    assert doc.pattern.panels[0].n_vertices == 3
    assert doc.metadata == {}
    assert validate_pattern(doc.pattern).ok


def test_parse_errors():
    assert error_of("{not json").code == "MALFORMED_JSON"
    assert error_of(b"\xff\xfe").code == "MALFORMED_JSON"
    assert error_of(doc_text().replace("10", "NaN", 1)).code == "MALFORMED_JSON"
    assert error_of(doc_text(version=2)).code == "VERSION_UNSUPPORTED"
    e = error_of(json.dumps({k: v for k, v in TRIANGLE_DOC.items() if k != "stitches"}))
    assert (e.code, e.location) == ("SCHEMA_VIOLATION", "/stitches")


def test_schema_pointer_paths():
    d = json.loads(doc_text())
    del d["panels"][0]["rotation"]
    e = error_of(json.dumps(d))
    assert (e.code, e.location) == ("SCHEMA_VIOLATION", "/panels/0/rotation")
    d = json.loads(doc_text())
    d["panels"][0]["vertices"][1] = [1, "x"]
    assert error_of(json.dumps(d)).location == "/panels/0/vertices/1/1"
    d = json.loads(doc_text())
    d["panels"][0]["edges"][2]["bogus"] = 1
    assert error_of(json.dumps(d)).location == "/panels/0/edges/2/bogus"
    d = json.loads(doc_text())
    d["stitches"] = [[[0, 0], [1]]]
    assert error_of(json.dumps(d)).location == "/stitches/0/1"


def test_file_not_found(tmp_path):
    with pytest.raises(SewError) as e:
        read_pattern(tmp_path / "missing.json")
    assert e.value.code == "FILE_NOT_FOUND"


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_corpus_roundtrip(path):
    raw = path.read_bytes()
    doc = parse_pattern(raw)
    text = serialize_pattern(doc)
    assert parse_pattern(text) == doc
    assert serialize_pattern(parse_pattern(text)) == text
    assert text.encode() == raw  # corpus files are stored in canonical form
    assert "\r" not in text and text.endswith("\n")
    assert validate_pattern(doc.pattern).ok


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_random_roundtrip(seed):
    pat = random_pattern(np.random.default_rng(seed))
    doc = PatternDocument(1, pat, {"z": "last", "a": "first"})
    text = serialize_pattern(doc)
    assert parse_pattern(text) == doc
    assert serialize_pattern(doc) == text


def test_metadata_preserved():
    doc = parse_pattern(doc_text(metadata={"category": "dress", "x-custom": "kept"}))
    assert parse_pattern(serialize_pattern(doc)).metadata == {"category": "dress", "x-custom": "kept"}


def test_nonfinite_serialization():
    pat = parse_pattern(doc_text()).pattern
    bad = SewingPattern(pat.panels, [Placement((0, 0, 0), (math.nan, 0, 0))], ())
    with pytest.raises(SewError) as e:
        serialize_pattern(PatternDocument(1, bad))
    assert e.value.code == "NONFINITE_VALUE"


# SVG

def test_square_path(unit_square):
    assert panel_path_data(unit_square) == "M 0 0 L 1 0 L 1 1 L 0 1 Z"


def test_curved_path_uses_absolute_control():
    panel = Panel.from_polygon("c", [(0, 0), (2, 0), (1, 3)], [(0.5, 0.5), None, None])
    assert panel_path_data(panel).startswith("M 0 0 Q 1 1 2 0 ")


def _svg_paths(text):
    root = ET.fromstring(text)
    return root, [g for g in root.iter(SVG_NS + "g")], [p for p in root.iter(SVG_NS + "path")]


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_svg_one_path_per_panel(path):
    pat = read_pattern(path).pattern
    root, groups, paths = _svg_paths(export_svg(pat))
    assert len(paths) == pat.n_panels == len(groups)
    # every Q control equals the stored control converted to absolute coordinates
    for panel, p in zip(pat.panels, paths):
        qs = re.findall(r"Q (\S+) (\S+)", p.get("d"))
        want = [control_to_absolute(panel.vertices[e.from_vertex], panel.vertices[e.to_vertex], e.control) for e in panel.edges if e.is_curved]
        assert [(float(x), float(y)) for x, y in qs] == [tuple(w) for w in want]


def test_svg_layout_disjoint_and_inside_viewbox():
    pat = read_pattern(corpus_files()[0].parent / "outfit.json").pattern
    text = export_svg(pat)
    root, _, _ = _svg_paths(text)
    _, _, vw, vh = map(float, root.get("viewBox").split())
    boxes = [b for _, _, b in svg_layout(pat)]
    for a, b in zip(boxes, boxes[1:]):
        assert b[0] - a[2] == pytest.approx(5.0)
    for x0, y0, x1, y1 in boxes:
        assert 0 <= x0 < x1 <= vw and 0 <= y0 < y1 <= vh


# OBJ

def _read_obj(text):
    v = [line for line in text.splitlines() if line.startswith("v ")]
    f = [line for line in text.splitlines() if line.startswith("f ")]
    g = [line for line in text.splitlines() if line.startswith("g ")]
    return v, f, g


def test_obj_single_triangle():
    g = assemble_garment(parse_pattern(doc_text()).pattern, AssemblyOptions(target_edge=math.inf))
    v, f, groups = _read_obj(export_obj(g))
    assert len(v) == 3 and f == ["f 1 2 3"] and groups == ["g tri"]


@pytest.mark.parametrize("name", ["skirt.json", "outfit.json"])
def test_obj_reread(name):
    g = assemble_garment(read_pattern(corpus_files()[0].parent / name).pattern)
    text = export_obj(g)
    v, f, groups = _read_obj(text)
    assert len(v) == g.n_vertices
    assert len(f) == len(g.triangles)
    assert len(groups) == g.n_panels
    pos = np.array([[float(x) for x in line.split()[1:]] for line in v])
    assert np.array_equal(pos, g.positions)
    idx = sorted(tuple(int(x) - 1 for x in line.split()[1:]) for line in f)
    assert idx == sorted(map(tuple, g.triangles.tolist()))
    assert export_obj(g) == text
