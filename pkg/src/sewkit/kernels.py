"""Hot-loop kernels with backend selection at import.

The compiled Cython module is used when it was built; otherwise (or when
``SEWKIT_PURE_PYTHON=1`` is set) the pure-Python twin is used. Both produce
bit-identical results. The wrappers here only normalise array dtypes and
layout before dispatching.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

if os.environ.get("SEWKIT_PURE_PYTHON", "") not in ("", "0") or _ckernels is None:
    _impl = _pykernels
else:
    _impl = _ckernels

BACKEND = _impl.BACKEND


def available_backends() -> list:
    return sorted(_BACKENDS)


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}") from None


def _f64(a, cols=None):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if cols is not None:
        a = a.reshape(-1, cols)
    return a


def project_constraints(pos, inv_mass, pairs, rest, stiffness, passes, backend=None):
    """In-place Gauss-Seidel projection of distance constraints on ``pos`` (must be float64, C-contiguous)."""
    impl = _impl if backend is None else get_backend(backend)
    if pos.dtype != np.float64 or not pos.flags.c_contiguous:
        raise TypeError("pos must be a C-contiguous float64 array")
    impl.project_constraints(
        pos,
        _f64(inv_mass),
        np.ascontiguousarray(pairs, dtype=np.int64).reshape(-1, 2),
        _f64(rest),
        _f64(stiffness),
        int(passes),
    )


def collide(pos, inv_mass, capsules, margin, max_rounds=16, backend=None) -> int:
    """In-place capsule collision projection; returns the number of corrections."""
    impl = _impl if backend is None else get_backend(backend)
    if pos.dtype != np.float64 or not pos.flags.c_contiguous:
        raise TypeError("pos must be a C-contiguous float64 array")
    return int(impl.collide(pos, _f64(inv_mass), _f64(capsules, 7), float(margin), int(max_rounds)))


def build_grid(points):
    """Bucket ``points`` (m, 3) into a uniform grid with roughly two points per occupied cell."""
    pts = _f64(points, 3)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = hi - lo
    span = float(extent.max())
    if span == 0.0:
        cell = 1.0
    else:
        cell = span / max(1, round(len(pts) ** (1.0 / 3.0)))
    dims = np.maximum(1, np.floor(extent / cell).astype(np.int64) + 1)
    idx = np.minimum(np.floor((pts - lo) / cell).astype(np.int64), dims - 1)
    cid = (idx[:, 0] * dims[1] + idx[:, 1]) * dims[2] + idx[:, 2]
    order = np.argsort(cid, kind="stable").astype(np.int64)
    n_cells = int(dims.prod())
    cell_start = np.searchsorted(cid[order], np.arange(n_cells + 1)).astype(np.int64)
    return lo, cell, dims, cell_start, order


def nn_distances(queries, points, backend=None):
    """Exact distance from every query to its nearest point, via grid search."""
    impl = _impl if backend is None else get_backend(backend)
    pts = _f64(points, 3)
    q = _f64(queries, 3)
    if len(pts) == 0:
        raise ValueError("empty point set")
    origin, cell, dims, cell_start, order = build_grid(pts)
    if not math.isfinite(cell):
        raise ValueError("non-finite coordinates")
    return impl.nn_distances(q, pts, origin, float(cell), [int(d) for d in dims], cell_start, order)
