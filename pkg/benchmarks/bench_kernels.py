"""Compare the compiled kernels with their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Times polygon clipping, the rotation/translation overlap grid and the
symmetrization sweep on identical inputs with both backends, and checks
that their outputs agree.
"""

import argparse
import json
import math
import time

import numpy as np

from polyfreq import kernels
from polyfreq.geometry import regular_polygon


def _best_of(fn, repeat):
    best, out = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _workloads(rng):
    P = np.ascontiguousarray(regular_polygon(7).vertices + rng.normal(scale=0.05, size=(7, 2)))
    Q = np.ascontiguousarray(regular_polygon(3, area=2.0).vertices)
    pairs = [(np.ascontiguousarray(regular_polygon(int(n), phase=float(ph)).vertices),
              np.ascontiguousarray(regular_polygon(int(m), phase=0.1).vertices + 0.2))
             for n, m, ph in zip(rng.integers(3, 12, 2000), rng.integers(3, 12, 2000),
                                 rng.uniform(0, 1, 2000))]
    angles = np.linspace(0, 2 * math.pi, 36, endpoint=False)
    shifts = np.linspace(-0.3, 0.3, 21)
    V = np.ascontiguousarray(regular_polygon(9).vertices * [1.6, 0.7])
    return {
        "clip_area x2000": lambda k: [k.clip_area(a, b) for a, b in pairs],
        "overlap_grid 36x21x21": lambda k: np.asarray(k.overlap_grid(P, Q, angles, shifts, shifts)),
        "symmetrize_sweep 9-gon": lambda k: np.asarray(k.symmetrize_sweep(V, 0, 5000, 1e-12,
                                                                          True)[0]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="write timings here")
    args = ap.parse_args(argv)

    py = kernels.get_backend("python")
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        print("compiled extension not available; nothing to compare")
        return 1
    rows = []
    print(f"{'kernel':26s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}  agree")
    for name, work in _workloads(np.random.default_rng(args.seed)).items():
        tp, op = _best_of(lambda: work(py), args.repeat)
        tc, oc = _best_of(lambda: work(cy), args.repeat)
        agree = bool(np.allclose(np.asarray(op, dtype=float), np.asarray(oc, dtype=float),
                                 rtol=1e-12, atol=1e-13))
        rows.append({"kernel": name, "python_s": tp, "cython_s": tc, "speedup": tp / tc,
                     "agree": agree})
        print(f"{name:26s} {tp:11.4f} {tc:11.5f} {tp / tc:8.1f}  {agree}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
