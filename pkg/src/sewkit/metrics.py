"""Pattern-vs-pattern and mesh-vs-mesh evaluation.

Panels are matched by index. A panel's parameter vector is its vertices (in
pattern units) followed by one relative control point per edge, with straight
edges written as the chord midpoint ``(0.5, 0)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .assembly import AssemblyOptions, assemble_garment
from .errors import SewError
from .model import Panel, SewingPattern
from .pattern_io import read_pattern

STRAIGHT_CONTROL = (0.5, 0.0)
TABLE_COLUMNS = ("Method", "Panel Acc.", "Edge Acc.", "Shape L²", "F-Shape L²", "CD")


def panel_params(panel: Panel) -> np.ndarray:
    verts = [c for v in panel.vertices for c in v]
    ctrls = [c for e in panel.edges for c in (e.control if e.control is not None else STRAIGHT_CONTROL)]
    return np.asarray(verts + ctrls, dtype=float)


def _matches(a: Panel, b: Panel) -> bool:
    return a.n_edges == b.n_edges and a.n_vertices == b.n_vertices


def panel_accuracy(pred: SewingPattern, gt: SewingPattern) -> int:
    """1 when the panel counts agree, else 0."""
    return int(pred.n_panels == gt.n_panels)


def edge_accuracy(pred: SewingPattern, gt: SewingPattern) -> float:
    """Fraction of GT panels whose index-matched prediction has the same edge count.

    GT panels without a counterpart count as wrong. Two empty patterns score 1.
    """
    if gt.n_panels == 0:
        return 1.0 if pred.n_panels == 0 else 0.0
    hits = sum(1 for p, g in zip(pred.panels, gt.panels) if p.n_edges == g.n_edges)
    return hits / gt.n_panels


def _panel_terms(pred: SewingPattern, gt: SewingPattern) -> list:
    """Per GT panel ``(matched, l2)``; unmatched panels take their own parameter norm."""
    terms = []
    for i, g in enumerate(gt.panels):
        gv = panel_params(g)
        if i < pred.n_panels and _matches(pred.panels[i], g):
            terms.append((True, float(np.linalg.norm(panel_params(pred.panels[i]) - gv))))
        else:
            terms.append((False, float(np.linalg.norm(gv))))
    return terms


def shape_l2(pred: SewingPattern, gt: SewingPattern) -> float:
    terms = _panel_terms(pred, gt)
    if not terms:
        return 0.0
    return float(np.mean([t for _, t in terms]))


def f_shape_l2(pred: SewingPattern, gt: SewingPattern) -> float:
    """Like :func:`shape_l2` but averaged over matched panels only (0 when none match)."""
    matched = [t for ok, t in _panel_terms(pred, gt) if ok]
    if not matched:
        return 0.0
    return float(np.mean(matched))


def _check_points(p, name):
    arr = np.asarray(p, dtype=float)
    if arr.size == 0:
        raise SewError("EMPTY_POINT_SET", f"point set {name} is empty")
    return arr.reshape(-1, 3)


def chamfer(points_a, points_b, squared: bool = False, backend=None) -> float:
    """Symmetric chamfer distance ``(mean_a min_b d + mean_b min_a d) / 2``.

    With ``squared`` the per-point distances are squared before averaging.
    Nearest neighbours come from an exact grid search.
    """
    a = _check_points(points_a, "a")
    b = _check_points(points_b, "b")
    dab = kernels.nn_distances(a, b, backend=backend)
    dba = kernels.nn_distances(b, a, backend=backend)
    if squared:
        dab = dab * dab
        dba = dba * dba
    return 0.5 * (float(dab.mean()) + float(dba.mean()))


def chamfer_brute(points_a, points_b, squared: bool = False) -> float:
    """O(n m) reference for :func:`chamfer`."""
    a = _check_points(points_a, "a")
    b = _check_points(points_b, "b")
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    if squared:
        d = d * d
    return 0.5 * (float(d.min(axis=1).mean()) + float(d.min(axis=0).mean()))


def sample_surface(positions, triangles, n: int, seed: int = 0) -> np.ndarray:
    """``n`` area-weighted uniform samples on a triangle mesh, reproducible for a seed."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    tri = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if len(tri) == 0:
        return pos.copy()
    a, b, c = pos[tri[:, 0]], pos[tri[:, 1]], pos[tri[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    total = area.sum()
    if total <= 0:
        return pos.copy()
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(tri), size=n, p=area / total)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    return a[pick] + u[:, None] * (b[pick] - a[pick]) + v[:, None] * (c[pick] - a[pick])


@dataclass(frozen=True)
class EvalOptions:
    # "assembled" (flat placed panels) or "draped" (after simulation on ``body``)
    mesh: str = "assembled"
    # surface samples per mesh; 0 uses mesh vertices directly
    n_samples: int = 2048
    squared: bool = False
    seed: int = 0
    # "sample": dataset value = mean of per-sample scores; "panel": edge accuracy pooled over all GT panels
    aggregation: str = "sample"
    method: str = "pred"
    assembly: AssemblyOptions = AssemblyOptions()
    body: object = None
    sim_params: object = None
    max_steps: int = 2000

    def __post_init__(self):
        if self.mesh not in ("assembled", "draped"):
            raise ValueError("mesh must be 'assembled' or 'draped'")
        if self.aggregation not in ("sample", "panel"):
            raise ValueError("aggregation must be 'sample' or 'panel'")
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")


@dataclass
class SampleScore:
    name: str
    panel_acc: float
    edge_acc: float
    shape_l2: float
    f_shape_l2: float
    chamfer: float | None
    n_gt_panels: int = 0
    edge_hits: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class EvalReport:
    method: str
    panel_acc: float
    edge_acc: float
    shape_l2: float
    f_shape_l2: float
    chamfer: float | None
    samples: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "panel_acc": self.panel_acc,
            "edge_acc": self.edge_acc,
            "shape_l2": self.shape_l2,
            "f_shape_l2": self.f_shape_l2,
            "chamfer": self.chamfer,
            "columns": list(TABLE_COLUMNS),
            "samples": [s.to_dict() for s in self.samples],
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def table(self) -> str:
        """Aligned text table: the aggregate row first, then one row per sample."""
        rows = [_row(self.method, self.panel_acc, self.edge_acc, self.shape_l2, self.f_shape_l2, self.chamfer)]
        rows += [_row(s.name, s.panel_acc, s.edge_acc, s.shape_l2, s.f_shape_l2, s.chamfer) for s in self.samples]
        cells = [list(TABLE_COLUMNS)] + rows
        widths = [max(len(r[k]) for r in cells) for k in range(len(TABLE_COLUMNS))]
        lines = [" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
        lines.insert(1, "-|-".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _row(name, pa, ea, sl2, fl2, cd) -> list:
    return [
        name,
        f"{100.0 * pa:.2f}%",
        f"{100.0 * ea:.2f}%",
        f"{sl2:.4f}",
        f"{fl2:.4f}",
        "n/a" if cd is None else f"{cd:.5f}",
    ]


def _mesh_points(pattern: SewingPattern, opts: EvalOptions) -> np.ndarray:
    garment = assemble_garment(pattern, opts.assembly)
    if opts.mesh == "draped":
        from .body import default_body
        from .sim import SimParams, drape

        body = opts.body if opts.body is not None else default_body()
        params = opts.sim_params if opts.sim_params is not None else SimParams(seed=opts.seed)
        garment, _ = drape(garment, body, params, max_steps=opts.max_steps)
    if opts.n_samples == 0:
        return garment.positions
    return sample_surface(garment.positions, garment.triangles, opts.n_samples, opts.seed)


def score_pair(name: str, pred: SewingPattern, gt: SewingPattern, opts: EvalOptions = EvalOptions()) -> SampleScore:
    warnings = []
    cd = None
    try:
        pa = _mesh_points(pred, opts)
        ga = _mesh_points(gt, opts)
        if len(pa) and len(ga):
            cd = chamfer(pa, ga, squared=opts.squared)
        else:
            warnings.append(f"{name}: empty mesh, chamfer skipped")
    except SewError as exc:
        warnings.append(f"{name}: chamfer skipped ({exc.code})")
    terms = _panel_terms(pred, gt)
    if gt.n_panels and not any(ok for ok, _ in terms):
        warnings.append(f"{name}: no matched panels, F-Shape L2 set to 0")
    return SampleScore(
        name=name,
        panel_acc=float(panel_accuracy(pred, gt)),
        edge_acc=edge_accuracy(pred, gt),
        shape_l2=shape_l2(pred, gt),
        f_shape_l2=f_shape_l2(pred, gt),
        chamfer=cd,
        n_gt_panels=gt.n_panels,
        edge_hits=sum(1 for p, g in zip(pred.panels, gt.panels) if p.n_edges == g.n_edges),
        warnings=warnings,
    )


def aggregate(samples, opts: EvalOptions = EvalOptions()) -> EvalReport:
    """Combine per-sample scores; the result does not depend on sample order."""
    samples = sorted(samples, key=lambda s: s.name)
    warnings = [w for s in samples for w in s.warnings]
    if not samples:
        return EvalReport(opts.method, 0.0, 0.0, 0.0, 0.0, None, [], ["no samples"])
    if opts.aggregation == "panel":
        total = sum(s.n_gt_panels for s in samples)
        edge = sum(s.edge_hits for s in samples) / total if total else 1.0
    else:
        edge = math.fsum(s.edge_acc for s in samples) / len(samples)
    cds = [s.chamfer for s in samples if s.chamfer is not None]
    return EvalReport(
        method=opts.method,
        panel_acc=math.fsum(s.panel_acc for s in samples) / len(samples),
        edge_acc=edge,
        shape_l2=math.fsum(s.shape_l2 for s in samples) / len(samples),
        f_shape_l2=math.fsum(s.f_shape_l2 for s in samples) / len(samples),
        chamfer=math.fsum(cds) / len(cds) if cds else None,
        samples=samples,
        warnings=warnings,
    )


def evaluate_dir(pred_dir, gt_dir, opts: EvalOptions = EvalOptions()) -> EvalReport:
    """Score every ``*.json`` pattern in ``gt_dir`` against the same-named file in ``pred_dir``."""
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise SewError("FILE_NOT_FOUND", f"no such directory: {d}")
    pred = {p.stem: p for p in pred_dir.glob("*.json")}
    gt = {p.stem: p for p in gt_dir.glob("*.json")}
    missing = sorted(set(pred) ^ set(gt))
    if missing:
        raise SewError("MISSING_PAIR", f"no counterpart for: {', '.join(missing)}", stems=missing)
    scores = [
        score_pair(stem, read_pattern(pred[stem]).pattern, read_pattern(gt[stem]).pattern, opts)
        for stem in sorted(gt)
    ]
    return aggregate(scores, opts)
