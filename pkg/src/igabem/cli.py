"""Command line interface: solve, converge and info.

Exit codes: 0 on success, 2 for model/validation problems, 3 for solver
failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    DomainError,
    GeometryError,
    IgabemError,
    ModelError,
    RefinementError,
    SingularityError,
    SolverError,
)
from .model_io import load_model
from .solver import locate_collocation
from .study import run_convergence, run_solve, write_convergence_csv

_VALIDATION_ERRORS = (ModelError, GeometryError, DomainError, RefinementError, ConfigError)
_SOLVER_ERRORS = (SolverError, SingularityError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igabem",
        description="2D isogeometric boundary element solver for elastostatics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a model and write result tables")
    solve.add_argument("model", help="model file (JSON)")
    solve.add_argument("--method", choices=("igabem", "lagrange"), default=None)
    solve.add_argument("--h-refine", type=int, default=0, metavar="N")
    solve.add_argument("--p-refine", type=int, default=0, metavar="N")
    solve.add_argument("--quad-regular", type=int, default=None, metavar="Q")
    solve.add_argument("--quad-singular", type=int, default=None, metavar="Q")
    solve.add_argument("--samples", type=int, default=20, metavar="N",
                       help="sample rows per element (default 20)")
    solve.add_argument("--exaggerate", type=float, default=1.0, metavar="F",
                       help="displacement exaggeration for the deformed boundary")
    solve.add_argument("--out", default="results", metavar="DIR")

    conv = sub.add_parser("converge", help="run an h-refinement convergence study")
    conv.add_argument("model")
    conv.add_argument("--levels", type=int, required=True, metavar="N")
    conv.add_argument("--methods", default="igabem,lagrange",
                      help="comma separated subset of igabem,lagrange")
    conv.add_argument("--quad-regular", type=int, default=None, metavar="Q")
    conv.add_argument("--quad-singular", type=int, default=None, metavar="Q")
    conv.add_argument("--out", default="results", metavar="DIR")

    info = sub.add_parser("info", help="print the element and collocation layout")
    info.add_argument("model")
    return parser


def _cmd_solve(args) -> int:
    model, settings = load_model(args.model)
    settings = settings.with_overrides(
        method=args.method,
        quad_regular=args.quad_regular,
        quad_singular=args.quad_singular,
    )
    report, paths = run_solve(
        model,
        method=settings.method,
        config=settings.quadrature,
        out_dir=args.out,
        samples_per_element=args.samples,
        exaggerate=args.exaggerate,
        h_levels=args.h_refine,
        p_levels=args.p_refine,
    )
    print(f"method:             {settings.method}")
    print(f"degrees of freedom: {report.solution.dof_count}")
    print(f"solve residual:     {report.solve_residual:.3e}")
    print(f"round-trip residual:{report.roundtrip_residual:.3e}")
    print(f"boundary L2 norm:   {report.solution.l2_norm():.9g}")
    for label, path in paths.items():
        print(f"{label}: {path}")
    return 0


def _cmd_converge(args) -> int:
    from . import plots

    model, settings = load_model(args.model)
    settings = settings.with_overrides(
        quad_regular=args.quad_regular, quad_singular=args.quad_singular
    )
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    records = run_convergence(
        model, methods=methods, max_level=args.levels - 1, config=settings.quadrature
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "convergence.csv"
    fig_path = out / "convergence.png"
    write_convergence_csv(csv_path, records)
    plots.save_convergence(fig_path, records)
    for rec in sorted(records, key=lambda r: (r.dofs, r.method)):
        print(
            f"{rec.method:8s} level {rec.level}  dofs {rec.dofs:5d}  "
            f"|u| {rec.l2_norm:.6g}  rel err {rec.rel_error:.6g}  "
            f"({rec.wall_time:.2f}s)"
        )
    print(f"table: {csv_path}")
    print(f"figure: {fig_path}")
    return 0


def _cmd_info(args) -> int:
    model, settings = load_model(args.model)
    curve = model.curve
    print(f"model:           {model.name or args.model}")
    print(f"degree:          {curve.degree}")
    print(f"control points:  {curve.n}")
    print(f"closed:          {curve.closed}")
    print(f"material:        mu={model.material.shear_modulus:g} "
          f"nu={model.material.poisson:g} ({model.material.regime})")
    print(f"solver defaults: method={settings.method} "
          f"quad={settings.quadrature.regular}/{settings.quadrature.near}/"
          f"{settings.quadrature.telles}/{settings.quadrature.sst}")
    print("\nelements (1-based):")
    table = model.elements
    for e in range(len(table)):
        conn =", ".join(str(a + 1) for a in table.conn[e])
        start, end = table.ranges[e]
        print(f"  {e + 1:3d}  [{start:g}, {end:g}]  basis ({conn})")
    print("\ncollocation points (Greville):")
    colloc = locate_collocation(curve)
    for entry in colloc.entries:
        print(
            f"  {entry.index + 1:3d}  xi'={entry.param:<8g} "
            f"x=({entry.point[0]:.6g}, {entry.point[1]:.6g})"
        )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "converge":
            return _cmd_converge(args)
        return _cmd_info(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except IgabemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
