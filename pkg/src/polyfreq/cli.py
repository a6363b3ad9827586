"""Command-line interface: ``polyfreq <command> [options]``.

Every run prints a JSON result (or writes it with ``--out``), writes any
CSV outputs requested, and records an experiment manifest with the
command, parameters, seed, tool version, input hashes and output paths.

Exit status: 0 success, 1 invalid input, 2 solver failure, 64 usage error.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, asdict, field

import numpy as np

from . import __version__
from .errors import NoConvergence, NoEquilibrium, PolyfreqError, SolverError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


# ---------------------------------------------------------------------------
# manifests and CSV


@dataclass
class ExperimentManifest:
    command: str
    parameters: dict
    seed: int | None
    version: str
    input_hashes: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_csv(path, columns, rows, description):
    """CSV with ``#`` comment lines describing each column, then a header row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {description}\n")
        for name, doc in columns:
            fh.write(f"# {name}: {doc}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([c for c, _ in columns])
        for r in rows:
            w.writerow(["" if isinstance(v, float) and math.isnan(v) else
                        (repr(v) if isinstance(v, float) else v) for v in r])


FLOW_COLUMNS = [("k", "iteration index (0 = input polygon)"),
                ("t_k", "offset removed by step k (empty for k = 0)"),
                ("perimeter", "perimeter of P^k"),
                ("area", "area of P^k"),
                ("max_side_dev", "max |l_i - mean(l)| / mean(l) of P^k")]

SERIES_COLUMNS = [("k", "flow step index"),
                  ("t", "offset t_{k-1} removed by the step"),
                  ("alpha_k", "dlambda/dt at the symmetric position"),
                  ("beta_k", "d2lambda/dt2 at offset t/2"),
                  ("partial_sum", "lambda(P_inf) + sum of terms up to k")]

FAMILY_COLUMNS = [("a", "half base of the isosceles triangle (area 1, height 1/a)"),
                  ("lambda", "FEM first eigenvalue"),
                  ("ratio", "(lambda - 4 pi^2/sqrt 3) / (L^2 - 12 sqrt 3)"),
                  ("ratio_over_pi2_16", "ratio / (pi^2/16)"),
                  ("lambda_Q", "eigenvalue of the containing rectangle"),
                  ("lambda_R", "eigenvalue of the inscribed rectangle"),
                  ("in_bracket", "ratio inside ((1-eps) pi^2/16, pi^2/16/(1-eps)^2)")]

SAMPLE_COLUMNS = [("index", "sample index"),
                  ("delta_lambda", "A lambda - 4 pi^2/sqrt 3"),
                  ("delta_P", "L^2/(12 sqrt 3 A) - 1"),
                  ("asymmetry", "Fraenkel asymmetry against the equilateral triangle"),
                  ("ratio", "delta_lambda / delta_P")]


def emit_plot_data(obj, path):
    """Write a CSV for external plotting from a result object."""
    from .spectra_formulas import SeriesReconstruction
    from .stability import StabilityExperiment
    from .symmetrize import FlowTrace
    if isinstance(obj, FlowTrace):
        write_csv(path, FLOW_COLUMNS, obj.rows(), "symmetrization flow trace")
    elif isinstance(obj, SeriesReconstruction):
        write_csv(path, SERIES_COLUMNS, obj.rows(), "flow series reconstruction terms")
    elif isinstance(obj, StabilityExperiment):
        rows = [(i, float(a), float(b), float(c), float(d)) for i, (a, b, c, d) in
                enumerate(zip(obj.delta_lambda, obj.delta_P, obj.asymmetry, obj.ratio))]
        write_csv(path, SAMPLE_COLUMNS, rows, f"stability experiment: {obj.family}")
    elif isinstance(obj, list) and obj and isinstance(obj[0], dict) and "ratio" in obj[0]:
        rows = [tuple(r[c] for c, _ in FAMILY_COLUMNS) for r in obj]
        write_csv(path, FAMILY_COLUMNS, rows, "thin isosceles family")
    else:
        raise TypeError(f"no CSV layout for {type(obj).__name__}")


# ---------------------------------------------------------------------------
# commands


def _load_polygon(path, ctx):
    from .geometry import Polygon
    if not os.path.exists(path):
        raise FileNotFoundError(f"polygon file not found: {path}")
    ctx["inputs"][path] = sha256_file(path)
    with open(path, encoding="utf-8") as fh:
        return Polygon.from_json(json.load(fh))


def cmd_eig(args, ctx):
    from .fem import order_estimate, solve_lambda1, triangulate
    P = _load_polygon(args.polygon, ctx)
    sol = solve_lambda1(triangulate(P, args.refine, grade_vertices=args.grade_vertices))
    out = {"lambda1": sol.lambda1, "ndof": int(sol.ndof), "residual": sol.residual,
           "order_estimate": None}
    if args.order and args.refine >= 2:
        lams = [solve_lambda1(triangulate(P, l, grade_vertices=args.grade_vertices)).lambda1
                for l in (args.refine - 2, args.refine - 1)] + [sol.lambda1]
        o = order_estimate(lams)
        out["order_estimate"] = None if math.isnan(o) else o
    return out


def cmd_flow(args, ctx):
    from .symmetrize import run_flow
    P = _load_polygon(args.polygon, ctx)
    tr = run_flow(P, max_iter=args.max_iter, tol=args.tol, schedule=args.schedule,
                  backend=args.backend)
    if args.trace:
        emit_plot_data(tr, args.trace)
        ctx["outputs"].append(args.trace)
    return {"converged": tr.converged, "iterations": tr.iterations_to_converge,
            "steps": tr.steps, "skipped_steps": int(np.sum(tr.status != 0)),
            "area_drift": tr.area_drift(), "initial_perimeter": float(tr.perimeters[0]),
            "final_perimeter": float(tr.perimeters[-1]),
            "final_vertices": tr.history[-1].tolist(), "backend": tr.backend}


def cmd_deriv(args, ctx):
    from .fem import solve_lambda1, triangulate
    from .shape_derivatives import DerivativeReport, d2lambda_dt2, dlambda_dt, hadamard_check
    from .symmetrize import frame_at
    P = _load_polygon(args.polygon, ctx)
    if args.fd_check:
        rep = hadamard_check(P, args.vertex, level=args.refine,
                             grade_vertices=args.grade_vertices)
    else:
        sol = solve_lambda1(triangulate(P, args.refine, grade_vertices=args.grade_vertices))
        fr = frame_at(P, args.vertex)
        d2 = d2lambda_dt2(sol, fr) if fr.t_star < 0.5 * fr.b else math.nan
        rep = DerivativeReport(dlambda_dt(sol, fr), d2, fr.t_star, sol.lambda1,
                               diameter=P.diameter)
    return rep.to_json()


def cmd_series(args, ctx):
    from .spectra_formulas import reconstruct_series
    P = _load_polygon(args.polygon, ctx)
    rec = reconstruct_series(P, K=args.terms, refine=args.refine)
    if args.csv:
        emit_plot_data(rec, args.csv)
        ctx["outputs"].append(args.csv)
    out = rec.to_json()
    for k in ("alpha_terms", "beta_terms", "t_sequence", "steps", "partial_sums", "rel_gap"):
        out.pop(k)
    return out


def cmd_stability(args, ctx):
    from .stability import equivalence_ratio_scan, pi2_over_16_family, sharpness_exponent_fit
    if args.family == "thin-isosceles":
        a_values = [float(x) for x in args.a.split(",")]
        rows = pi2_over_16_family(a_values, epsilon=args.epsilon, refine=args.refine)
        if args.csv:
            emit_plot_data(rows, args.csv)
            ctx["outputs"].append(args.csv)
        return {"family": args.family, "epsilon": args.epsilon, "rows": rows}
    if args.family == "vertex-slide":
        ts = [float(x) for x in args.t.split(",")]
        exp = sharpness_exponent_fit(ts, refine=args.refine)
    else:  # random
        from .geometry import Polygon
        rng = np.random.default_rng(ctx["seed"])
        samples = []
        while len(samples) < args.count:
            V = rng.uniform(-1, 1, (3, 2))
            try:
                T = Polygon(V, simplify=False)
            except ValueError:
                continue
            if T.diameter ** 2 / T.area <= 2 * args.max_aspect:
                samples.append(T)
        exp = equivalence_ratio_scan(samples, refine=args.refine)
    if args.csv:
        emit_plot_data(exp, args.csv)
        ctx["outputs"].append(args.csv)
    return exp.to_json()


def cmd_bubble(args, ctx):
    from .bubble import BubbleParams, energy, equilibrium_scale, quartic, energy_derivative
    p = BubbleParams.for_polygon(args.psi, args.sigma, args.pressure, args.n, refine=args.refine,
                                 allow_negative_pressure=args.allow_negative_pressure)
    a = equilibrium_scale(p)
    return {"a": a, "energy_at_a": energy(p, a), "residual": abs(quartic(p, a)),
            "dh_da": energy_derivative(p, a), "params": p.to_json()}


def cmd_manifold(args, ctx):
    from .manifold import dpsi_at_regular, dq_at_regular
    out = {"n": args.n}
    if args.check_kernels:
        dq = dq_at_regular(args.n)
        dpsi = dpsi_at_regular(args.n)
        out["DQ"] = dq.to_json()
        out["DQ"]["expected_nullity"] = 2 * args.n - 4
        out["DPsi"] = dpsi.to_json()
        out["DPsi"]["expected_nullity"] = args.n - 3 if args.n >= 4 else None
    return out


def cmd_sample(args, ctx):
    from .geometry import to_manifold, validate_manifold
    from .manifold import sample_near_regular
    polys = sample_near_regular(args.n, args.radius, alpha=args.alpha, seed=ctx["seed"],
                                count=args.count)
    worst = max(max(r.angle_sum, r.area, r.centroid_cos, r.centroid_sin) for r in
                (validate_manifold(to_manifold(P)) for P in polys))
    if args.out_samples:
        with open(args.out_samples, "w", encoding="utf-8", newline="\n") as fh:
            for P in polys:
                fh.write(json.dumps(P.to_json()) + "\n")
        ctx["outputs"].append(args.out_samples)
    return {"count": len(polys), "n": args.n, "radius": args.radius,
            "max_manifold_residual": worst}


def build_parser():
    p = _Parser(prog="polyfreq", description="Polygon eigenvalues and symmetrization flows.")
    p.add_argument("--version", action="version", version=f"polyfreq {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (POLYFREQ_SEED overrides)")
    common.add_argument("--out", help="write the JSON result here instead of stdout")
    common.add_argument("--manifest", help="manifest path (default: <out>.manifest.json "
                                           "or polyfreq-<command>.manifest.json)")
    common.add_argument("--jobs", type=int, default=1, help="accepted for batch runs; "
                                                            "work is done sequentially")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("eig", parents=[common], help="first Dirichlet eigenvalue")
    s.add_argument("--polygon", required=True)
    s.add_argument("--refine", type=int, default=6)
    s.add_argument("--grade-vertices", action="store_true")
    s.add_argument("--order", action="store_true", help="estimate the convergence order")
    s.set_defaults(func=cmd_eig)

    s = sub.add_parser("flow", parents=[common], help="symmetrization flow")
    s.add_argument("--polygon", required=True)
    s.add_argument("--max-iter", type=int, default=1000)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--trace", help="CSV trace output")
    s.add_argument("--schedule", choices=["cyclic", "largest"], default="cyclic")
    s.add_argument("--backend", choices=["python", "cython"], default=None)
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("deriv", parents=[common], help="eigenvalue derivatives of one step")
    s.add_argument("--polygon", required=True)
    s.add_argument("--vertex", type=int, default=0, help="first vertex of the window")
    s.add_argument("--refine", type=int, default=6)
    s.add_argument("--grade-vertices", action="store_true", default=True)
    s.add_argument("--no-grade-vertices", dest="grade_vertices", action="store_false")
    s.add_argument("--fd-check", action="store_true")
    s.set_defaults(func=cmd_deriv)

    s = sub.add_parser("series", parents=[common], help="flow series reconstruction")
    s.add_argument("--polygon", required=True)
    s.add_argument("--terms", type=int, default=50)
    s.add_argument("--refine", type=int, default=6)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_series)

    s = sub.add_parser("stability", parents=[common], help="triangle deficit experiments")
    s.add_argument("--family", choices=["thin-isosceles", "vertex-slide", "random"],
                   default="thin-isosceles")
    s.add_argument("--a", default="5,10,20")
    s.add_argument("--epsilon", type=float, default=0.1)
    s.add_argument("--t", default="0.02,0.04,0.08")
    s.add_argument("--count", type=int, default=20)
    s.add_argument("--max-aspect", type=float, default=10.0)
    s.add_argument("--refine", type=int, default=7)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_stability)

    s = sub.add_parser("bubble", parents=[common], help="bubble equilibrium scale")
    s.add_argument("--psi", type=float, required=True)
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--pressure", type=float, default=0.0)
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--refine", type=int, default=5)
    s.add_argument("--allow-negative-pressure", action="store_true")
    s.set_defaults(func=cmd_bubble)

    s = sub.add_parser("manifold", parents=[common], help="Jacobian kernel dimensions")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--check-kernels", action="store_true")
    s.set_defaults(func=cmd_manifold)

    s = sub.add_parser("sample", parents=[common], help="sample polygons near the regular one")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--radius", type=float, required=True)
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--out-samples", help="JSON-lines output of polygons")
    s.set_defaults(func=cmd_sample)
    return p


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dispatch(argv=None):
    """Run one command; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    seed = args.seed
    env = os.environ.get("POLYFREQ_SEED")
    if env:
        try:
            seed = int(env)
        except ValueError:
            sys.stderr.write(f"polyfreq: invalid POLYFREQ_SEED {env!r}\n")
            return EXIT_INVALID
    ctx = {"seed": seed, "inputs": {}, "outputs": []}
    try:
        result = args.func(args, ctx)
    except (NoConvergence, SolverError, NoEquilibrium) as exc:
        sys.stderr.write(f"polyfreq: solver error: {exc}\n")
        return EXIT_SOLVER
    except (PolyfreqError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"polyfreq: invalid input: {exc}\n")
        return EXIT_INVALID
    text = json.dumps(_jsonable(result), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        ctx["outputs"].insert(0, args.out)
    else:
        sys.stdout.write(text)
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = ExperimentManifest(args.command, _jsonable(params), seed, __version__,
                                  ctx["inputs"], ctx["outputs"])
    mpath = args.manifest or (args.out + ".manifest.json" if args.out
                              else f"polyfreq-{args.command}.manifest.json")
    manifest.write(mpath)
    return EXIT_OK


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
