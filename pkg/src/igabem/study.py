"""Refinement driver, result emission and the convergence harness.

`run_solve` writes the boundary sample table and the deformed-boundary
polyline as CSV, plus rendered figures of both.  `run_convergence` refines a
model h- or p-wise, solves with the requested methods, and reports the
boundary L2 norm and the relative L2 error of each level against that
method's finest+1 solve, or against the analytic reference when the model
declares one.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ModelError
from .lagrange import conventional_solve
from .nurbs import curve_elements, element_ranges, elevate_order, insert_knot
from .quadrature import QuadratureConfig, gauss_legendre
from .solver import BemModel, solve_model

METHODS = ("igabem", "lagrange")


def refine_model(model: BemModel, strategy: str, levels: int) -> BemModel:
    """Apply `levels` rounds of uniform h- (span bisection) or p-refinement.

    Both refinements preserve the geometry and its parameterisation, so the
    boundary condition ranges stay valid unchanged.
    """
    if levels < 0:
        raise ConfigError("refinement levels must be non-negative")
    if strategy not in ("h", "p"):
        raise ConfigError(f"unknown refinement strategy {strategy!r}")
    curve = model.curve
    for _ in range(levels):
        if strategy == "h":
            for start, end in element_ranges(curve.knots):
                curve = insert_knot(curve, 0.5 * (start + end))
        else:
            curve = elevate_order(curve)
    if curve is model.curve:
        return model
    return BemModel.create(
        curve,
        model.material,
        model.bcs,
        analytic_reference=model.analytic_reference,
        name=model.name,
    )


def solve_with_method(model: BemModel, method: str, config: QuadratureConfig, level: int = 0):
    """Solve after `level` rounds of h-refinement with the chosen method.

    The Lagrange path meshes the unrefined curve with 2^level elements per
    span, which matches the element count of the h-refined spline space.
    """
    if method == "igabem":
        return solve_model(refine_model(model, "h", level), config)
    if method == "lagrange":
        return conventional_solve(model, 2**level, config)
    raise ConfigError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Field comparison over the exact boundary
# ---------------------------------------------------------------------------


def _solution_breakpoints(solution) -> set:
    if hasattr(solution, "mesh"):
        breaks = set(float(t) for t in solution.mesh.params[0::2])
        breaks.add(float(solution.curve.domain[1]))
        return breaks
    return set(float(v) for v in np.unique(solution.curve.knots))


def relative_l2_difference(field, reference_field, geometry, breakpoints, order: int = 10) -> float:
    """Relative boundary L2 distance between two parameter-space fields.

    Integration runs on the exact geometry, segment by segment over the
    union of both fields' breakpoints, so piecewise-polynomial integrands
    stay smooth inside every panel.
    """
    rule = gauss_legendre(order)
    table = geometry.element_table()
    views = curve_elements(geometry, table, lambda a: a)
    starts = [view.xi_start for view in views]
    breakpoints = sorted(breakpoints)
    num = den = 0.0
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        if b - a <= 1e-13:
            continue
        e = min(max(int(np.searchsorted(starts, 0.5 * (a + b))) - 1, 0), len(views) - 1)
        view = views[e]
        ts = a + 0.5 * (rule.points + 1.0) * (b - a)
        xi_hats = 2.0 * (ts - view.xi_start) / (view.xi_end - view.xi_start) - 1.0
        jacs = view.frames(xi_hats).jacobians * (b - a) / (view.xi_end - view.xi_start)
        for t, jac, wq in zip(ts, jacs, rule.weights):
            ua = field(float(t))
            ub = reference_field(float(t))
            num += float((ua - ub) @ (ua - ub)) * jac * wq
            den += float(ub @ ub) * jac * wq
    if den <= 0.0:
        raise ModelError("reference field vanishes; relative error is undefined")
    return math.sqrt(num / den)


def annulus_reference_field(model: BemModel):
    """Analytic boundary displacement of the pressurised thick ring.

    u_r(r) = p a^2 / (2 mu (b^2 - a^2)) * ((1 - 2 nu) r + b^2 / r), radial
    direction, plane strain.  Returns a parameter-space field on the model's
    exact curve, or None when the model declares no analytic reference.
    """
    ref = model.analytic_reference
    if ref is None or ref.get("kind") != "pressurised_annulus":
        return None
    a = ref["inner_radius"]
    b = ref["outer_radius"]
    p = ref["pressure"]
    mu = model.material.shear_modulus
    nu = model.material.poisson
    scale = p * a * a / (2.0 * mu * (b * b - a * a))
    curve = model.curve

    def field(t: float) -> np.ndarray:
        x = curve.point(t)
        r = float(np.hypot(x[0], x[1]))
        u_r = scale * ((1.0 - 2.0 * nu) * r + b * b / r)
        return u_r * x / r

    return field


# ---------------------------------------------------------------------------
# Convergence study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRecord:
    method: str
    level: int
    dofs: int
    l2_norm: float
    rel_error: float
    wall_time: float


def run_convergence(
    model: BemModel,
    methods=METHODS,
    max_level: int = 2,
    config: QuadratureConfig = QuadratureConfig(),
) -> list[ConvergenceRecord]:
    """Refine, solve and tabulate errors for each method and level.

    Levels 0..max_level are solved per method; the reference is the analytic
    field when the model declares one, otherwise that method's own solve at
    max_level + 1.
    """
    if max_level < 0:
        raise ConfigError("max_level must be non-negative")
    analytic = annulus_reference_field(model)
    records = []
    for method in methods:
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}")
        solutions = {}
        times = {}
        for level in range(max_level + 1):
            tic = time.perf_counter()
            solutions[level] = solve_with_method(model, method, config, level).solution
            times[level] = time.perf_counter() - tic
        if analytic is None:
            reference = solve_with_method(model, method, config, max_level + 1).solution
            ref_field = reference.displacement
            ref_breaks = _solution_breakpoints(reference)
        else:
            ref_field = analytic
            ref_breaks = _solution_breakpoints(solutions[max_level])
        previous_dofs = 0
        for level in range(max_level + 1):
            sol = solutions[level]
            breaks = _solution_breakpoints(sol) | ref_breaks
            err = relative_l2_difference(sol.displacement, ref_field, model.curve, breaks)
            if sol.dof_count <= previous_dofs:
                raise ModelError("refinement did not increase the DOF count")
            previous_dofs = sol.dof_count
            records.append(
                ConvergenceRecord(
                    method=method,
                    level=level,
                    dofs=sol.dof_count,
                    l2_norm=sol.l2_norm(),
                    rel_error=err,
                    wall_time=times[level],
                )
            )
    return records


def matched_dof_pairs(records_a, records_b, tolerance: float = 0.3):
    """Pair records of two methods whose DOF counts match.

    Two records match when each is the other's closest by relative DOF
    difference and that difference stays within `tolerance`.  This is how
    the error curves of the methods are compared "at matched DOF" when their
    refinement ladders do not produce identical counts.
    """

    def rel_diff(x, y):
        return abs(x - y) / (0.5 * (x + y))

    pairs = []
    for ra in records_a:
        best_b = min(records_b, key=lambda rb: rel_diff(ra.dofs, rb.dofs))
        back = min(records_a, key=lambda rx: rel_diff(best_b.dofs, rx.dofs))
        if back is ra and rel_diff(ra.dofs, best_b.dofs) <= tolerance:
            pairs.append((ra, best_b))
    return pairs


# ---------------------------------------------------------------------------
# Result emission
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def sample_rows(solution, samples_per_element: int = 20):
    """Boundary samples (xi, x, y, u_x, u_y, t_x, t_y) at uniform density."""
    if hasattr(solution, "mesh"):
        starts = list(solution.mesh.params[0::2])
        ends = starts[1:] + [float(solution.curve.domain[1])]
        segments = list(zip(starts, ends))
        geometry = solution.curve
    else:
        segments = [tuple(r) for r in element_ranges(solution.curve.knots)]
        geometry = solution.curve
    rows = []
    for k, (a, b) in enumerate(segments):
        ts = np.linspace(a, b, samples_per_element, endpoint=False)
        if k == len(segments) - 1:
            ts = np.append(ts, b)
        for t in ts:
            x = geometry.point(float(t))
            u = solution.displacement(float(t))
            tr = solution.traction(float(t))
            rows.append((float(t), x[0], x[1], u[0], u[1], tr[0], tr[1]))
    return rows


def write_boundary_samples(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("xi,x,y,u_x,u_y,t_x,t_y\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def write_deformed_boundary(path, rows, exaggerate: float) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("xi,x,y,x_deformed,y_deformed\n")
        for xi, x, y, ux, uy, _, _ in rows:
            handle.write(
                ",".join(
                    _fmt(v)
                    for v in (xi, x, y, x + exaggerate * ux, y + exaggerate * uy)
                )
                + "\n"
            )


def write_convergence_csv(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("method,level,dofs,l2_norm,rel_error,wall_time_s\n")
        for rec in sorted(records, key=lambda r: (r.dofs, r.method)):
            handle.write(
                f"{rec.method},{rec.level},{rec.dofs},"
                f"{_fmt(rec.l2_norm)},{_fmt(rec.rel_error)},{_fmt(rec.wall_time)}\n"
            )


def run_solve(
    model: BemModel,
    method: str = "igabem",
    config: QuadratureConfig = QuadratureConfig(),
    out_dir="results",
    samples_per_element: int = 20,
    exaggerate: float = 1.0,
    h_levels: int = 0,
    p_levels: int = 0,
):
    """Solve a model and write the report files.

    Produces boundary_samples.csv, deformed_boundary.csv and a rendered
    deformed-boundary figure in `out_dir`; returns the report and the paths.
    """
    from . import plots

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    refined = refine_model(model, "h", h_levels)
    refined = refine_model(refined, "p", p_levels)
    if method == "igabem":
        report = solve_model(refined, config)
    elif method == "lagrange":
        report = conventional_solve(refined, 1, config)
    else:
        raise ConfigError(f"unknown method {method!r}")
    rows = sample_rows(report.solution, samples_per_element)
    paths = {
        "samples": out / "boundary_samples.csv",
        "deformed": out / "deformed_boundary.csv",
        "figure": out / "deformed_boundary.png",
    }
    write_boundary_samples(paths["samples"], rows)
    write_deformed_boundary(paths["deformed"], rows, exaggerate)
    plots.save_deformed_boundary(paths["figure"], rows, exaggerate)
    return report, paths
