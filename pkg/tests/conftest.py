import math
from pathlib import Path

import numpy as np
import pytest

from sewkit.model import Panel, Placement, SewingPattern, Stitch
from sewkit.validation import validate_pattern

CORPUS = Path(__file__).resolve().parents[1] / "src" / "sewkit" / "data" / "corpus"


def corpus_files():
    return sorted(CORPUS.glob("*.json"))


def star_polygon(rng, n, scale=1.0, center=(0.0, 0.0)):
    """Random CCW star-shaped (hence simple) polygon with ``n`` vertices."""
    # evenly spaced angles with bounded jitter keep every gap in (0, pi)
    step = 2.0 * math.pi / n
    ang = (np.arange(n) + rng.uniform(-0.2, 0.2, n)) * step + rng.uniform(0.0, step)
    rad = rng.uniform(0.3, 1.0, n) * scale
    return [(center[0] + r * math.cos(a), center[1] + r * math.sin(a)) for r, a in zip(rad, ang)]


def random_placement(rng):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, math.pi * 0.99)
    return Placement(tuple(axis * angle), tuple(rng.uniform(-1.5, 1.5, 3)))


def random_pattern(rng, max_panels=5, max_vertices=9, curve_prob=0.3):
    """Random pattern that passes validation (retries until it does)."""
    while True:
        n_panels = int(rng.integers(1, max_panels + 1))
        panels = []
        for i in range(n_panels):
            n = int(rng.integers(3, max_vertices + 1))
            verts = star_polygon(rng, n, scale=rng.uniform(5.0, 60.0), center=tuple(rng.uniform(-50, 50, 2)))
            controls = [
                (float(rng.uniform(0.2, 0.8)), float(rng.uniform(-0.1, 0.1))) if rng.random() < curve_prob else None
                for _ in range(n)
            ]
            panels.append(Panel.from_polygon(f"p{i}", verts, controls))
        placements = [random_placement(rng) for _ in panels]
        free = [(i, j) for i, p in enumerate(panels) for j in range(p.n_edges)]
        rng.shuffle(free)
        stitches = []
        used = set()
        for a in free:
            if a in used or rng.random() < 0.6:
                continue
            partner = next((b for b in free if b not in used and b != a and b[0] != a[0]), None)
            if partner is None:
                continue
            used.update((a, partner))
            stitches.append(Stitch(a, partner))
        pat = SewingPattern(panels, placements, stitches)
        if validate_pattern(pat).ok:
            return pat


# acceptance gate: tests marked ``criterion(n, title)`` get one PASS/FAIL line in the summary

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    rep = outcome.get_result()
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "seen": False, "time": 0.0})
    if rep.when == "call" or rep.failed:
        entry["seen"] = True
        entry["ok"] &= rep.passed
        entry["time"] += rep.duration


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = ("PASS" if e["ok"] else "FAIL") if e["seen"] else "SKIP"
        terminalreporter.write_line(f"{status}  {number:2d}. {e['title']}  ({e['time']:.2f}s)")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_square():
    return Panel.from_polygon("square", [(0, 0), (1, 0), (1, 1), (0, 1)])
