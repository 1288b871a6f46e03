"""Command-line interface.

Subcommands: gauge-info, rearrange, geom, symmetrize, solve, compare, suite.
Exit codes: 0 all comparisons pass, 1 any FAIL/REJECTED/FAILED, 2 config or
runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, pdesolve
from .errors import ConvexSymError
from .gauge import ball_measure_quadrature, parse_gauge
from .geomeasure import (coarea_check, isoperimetric_check,
                         random_convex_polygon, wulff_polygon)
from .rearrange import (GridFunction, PseudoRearrangement,
                        decreasing_rearrangement, distribution,
                        load_gridfunction, profile_from_csv, profile_to_csv,
                        save_gridfunction)
from .symsol import (ConstantDrift, SymmetrizedProblem, constant_profile,
                     symmetrized_solution)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_gauge_info(args) -> int:
    g = parse_gauge(args.gauge)
    alpha, beta = g.alpha_beta()
    rep = g.check_duality(samples=args.samples, seed=args.seed)
    _emit({
        "gauge": g.describe(),
        "dim": g.dim,
        "scale": g.scale,
        "alpha": alpha,
        "beta": beta,
        "kappa": g.kappa(),
        "unit_ball_measure": g.ball_measure(),
        "unit_ball_measure_quadrature": ball_measure_quadrature(g),
        "duality_residuals": {
            "polar_gradient": rep.polar_gradient_residual,
            "gradient": rep.gradient_residual,
            "inversion": rep.inversion_residual,
        },
    }, args.out)
    return 0


def _cmd_rearrange(args) -> int:
    u = load_gridfunction(args.input)
    prof = distribution(u) if args.what == "distribution" else decreasing_rearrangement(u)
    profile_to_csv(prof, args.out)
    return 0


def _cmd_geom_check(args) -> int:
    g = parse_gauge(args.gauge)
    if args.suite == "isoperimetric":
        rng = np.random.default_rng(args.seed)
        ratios = [isoperimetric_check(random_convex_polygon(rng), g).ratio
                  for _ in range(100)]
        wulff = isoperimetric_check(wulff_polygon(g, 1.0, 256), g)
        doc = {"suite": "isoperimetric", "gauge": g.describe(),
               "min_ratio": min(ratios), "wulff_ratio": wulff.ratio,
               "wulff_defect": abs(wulff.ratio - 1.0)}
    elif args.suite == "coarea":
        nx = args.grid
        xs = (np.arange(nx) + 0.5) * (2.0 / nx) - 1.0
        X, Y = np.meshgrid(xs, xs)
        r = np.hypot(X, Y)
        u = GridFunction(np.where(r < 1.0, 1.0 - r, 0.0), r < 1.0, 2.0 / nx, (-1.0, -1.0))
        rep = coarea_check(u, g)
        doc = {"suite": "coarea", "gauge": g.describe(), "grid": nx,
               "total_variation": rep.total_variation,
               "coarea_integral": rep.coarea_integral,
               "rel_residual": rep.rel_residual}
    else:
        rep = parse_gauge(args.gauge).check_duality(samples=1000, seed=args.seed)
        doc = {"suite": "euler", "gauge": g.describe(),
               "polar_gradient_residual": rep.polar_gradient_residual,
               "gradient_residual": rep.gradient_residual,
               "inversion_residual": rep.inversion_residual}
    _emit(doc, args.out)
    return 0


def _parse_source(spec: str, measure: float):
    if spec.startswith("const:"):
        return constant_profile(float(spec[len("const:"):]), measure)
    return profile_from_csv(spec)


def _parse_drift(spec: str, total_radius: float):
    if spec.startswith("beta:"):
        return ConstantDrift(float(spec[len("beta:"):]))
    data = np.loadtxt(spec, delimiter=",", skiprows=1, ndmin=2)
    return PseudoRearrangement(data[:, 0], data[:, 1], total_radius)


def _cmd_symmetrize(args) -> int:
    g = parse_gauge(args.gauge)
    if g.dim != args.n:
        raise ConvexSymError(f"gauge dimension {g.dim} != requested n {args.n}")
    measure = args.measure
    total_radius = (measure / g.kappa()) ** (1.0 / g.dim)
    problem = SymmetrizedProblem(g, measure, _parse_source(args.f, measure),
                                 _parse_drift(args.drift, total_radius), q=args.q)
    sol = symmetrized_solution(problem, points=args.points)
    np.savetxt(args.out, np.column_stack([sol.rho, sol.v, sol.vprime]),
               delimiter=",", header="rho,v,vprime", comments="")
    return 0


def _cmd_solve(args) -> int:
    with open(args.config) as f:
        cfg = json.load(f)
    inst = pdesolve.parse_instance(cfg, grid_override=args.grid)
    u, diag = pdesolve.solve(inst, tol=args.tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = inst.label or Path(args.config).stem
    save_gridfunction(u, out / f"{stem}.solution.json")
    _emit(vars(diag).copy(), str(out / f"{stem}.diagnostics.json"))
    return 0


def _cmd_compare(args) -> int:
    rep = harness.run_comparison(args.config, grid=args.grid, tol=args.tol)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.config).stem
        if args.format == "json":
            rep.write_json(out / f"{stem}.report.json")
        if rep.s is not None:
            rep.write_curves_csv(out / f"{stem}.curves.csv")
    print(json.dumps(rep.to_dict(include_curves=False), sort_keys=True, indent=1))
    return 0 if rep.verdict == "PASS" else 1


def _cmd_suite(args) -> int:
    if args.write_builtin:
        paths = harness.write_builtin_suite(args.directory, nx=args.grid or 129)
        print(f"wrote {len(paths)} configs to {args.directory}")
        return 0
    rows = harness.run_suite(args.directory, out_dir=args.out, grid=args.grid,
                             tol=args.tol)
    for row in rows:
        print(f"{row['label']:24s} {row['verdict']}")
    return 0 if all(r["verdict"] == "PASS" for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="convexsym",
                                 description="Convex symmetrization toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gauge-info", help="gauge constants and duality residuals")
    p.add_argument("--gauge", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_gauge_info)

    p = sub.add_parser("rearrange", help="grid function -> profile CSV")
    p.add_argument("input")
    p.add_argument("--what", choices=["ustar", "distribution"], default="ustar")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_rearrange)

    p = sub.add_parser("geom", help="geometry residual suites")
    gsub = p.add_subparsers(dest="geom_command", required=True)
    pc = gsub.add_parser("check")
    pc.add_argument("--gauge", required=True)
    pc.add_argument("--suite", choices=["isoperimetric", "coarea", "euler"],
                    required=True)
    pc.add_argument("--grid", type=int, default=129)
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--out")
    pc.set_defaults(fn=_cmd_geom_check)

    p = sub.add_parser("symmetrize", help="evaluate the symmetrized radial solution")
    p.add_argument("--gauge", required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--measure", type=float, required=True)
    p.add_argument("--f", required=True, help="const:c or profile CSV")
    p.add_argument("--drift", required=True, help="beta:v or btilde CSV")
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--points", type=int, default=2049)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_symmetrize)

    p = sub.add_parser("solve", help="solve one instance config")
    p.add_argument("config")
    p.add_argument("--grid", type=int)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default=".")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("compare", help="run one comparison experiment")
    p.add_argument("config")
    p.add_argument("--grid", type=int)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("suite", help="run a directory of comparison configs")
    p.add_argument("directory")
    p.add_argument("--out")
    p.add_argument("--grid", type=int)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--write-builtin", action="store_true",
                   help="write the built-in configs into DIRECTORY and exit")
    p.set_defaults(fn=_cmd_suite)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConvexSymError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
