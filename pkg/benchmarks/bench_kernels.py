"""Compare the compiled and pure-Python kernel backends.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N] [--json]``.
Each kernel runs on identical inputs per backend; outputs are checked for
bitwise equality before timings are reported.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from sewkit import kernels
from sewkit.body import BodyTrack, default_body
from sewkit.sim import SimParams, build_sim, grid_cloth


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def case_constraints(backend, repeat):
    g = grid_cloth(40, 40, plane="xz")
    state = build_sim(g, BodyTrack.static(()), SimParams())
    rng = np.random.default_rng(0)
    start = state.positions + rng.normal(scale=0.01, size=state.positions.shape)
    stiff = np.ones(len(state.rest))

    def run():
        pos = np.ascontiguousarray(start.copy())
        kernels.project_constraints(pos, state.inverse_masses, state.pairs, state.rest, stiff, 10, backend=backend)
        return pos

    return f"project_constraints ({len(state.rest)} constraints x 10 passes)", _best(run, repeat)


def case_collide(backend, repeat):
    caps = default_body().capsules_at(0.0)
    rng = np.random.default_rng(1)
    start = rng.uniform([-0.8, 0.0, -0.2], [0.8, 1.6, 0.2], size=(5000, 3))
    w = np.ones(len(start))

    def run():
        pos = np.ascontiguousarray(start.copy())
        kernels.collide(pos, w, caps, 0.002, 8, backend=backend)
        return pos

    return "collide (5000 particles, 7 capsules)", _best(run, repeat)


def case_chamfer(backend, repeat):
    rng = np.random.default_rng(2)
    a = rng.random((4000, 3))
    b = rng.random((4000, 3))
    return "nn_distances (4000 x 4000)", _best(lambda: kernels.nn_distances(a, b, backend=backend), repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    rows = []
    for case in (case_constraints, case_collide, case_chamfer):
        results = {}
        for b in backends:
            label, (t, out) = case(b, args.repeat)
            results[b] = (t, out)
        outs = [r[1] for r in results.values()]
        identical = all(np.array_equal(outs[0], o) for o in outs[1:])
        row = {"kernel": label, "identical": identical}
        row.update({f"{b}_s": results[b][0] for b in backends})
        if "cython" in results:
            row["speedup"] = results["python"][0] / results["cython"][0]
        rows.append(row)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"default backend: {kernels.BACKEND}")
    for r in rows:
        timing = "  ".join(f"{b}={r[b + '_s'] * 1e3:9.2f} ms" for b in backends)
        extra = f"  speedup={r['speedup']:.1f}x" if "speedup" in r else ""
        print(f"{r['kernel']:<48} {timing}{extra}  identical={r['identical']}")


if __name__ == "__main__":
    main()
