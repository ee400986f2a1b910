"""Collocation BEM solver on NURBS boundaries.

Places collocation points at the Greville abscissae, assembles the H and G
influence matrices with the singular quadrature routines, rearranges them
into A x = z under the prescribed boundary conditions, solves, and exposes
the boundary fields.

The assembly core (`assemble_rows`) is shared with the conventional
Lagrange discretisation: it only sees duck-typed element views and
collocation entries, so the two methods differ purely in where they
collocate and which shape functions they integrate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError, SolverError, ValidationError
from .kernels import Material, jump_term, wedge_angles
from .nurbs import ElementTable, NurbsCurve, curve_elements
from .quadrature import (
    DEFAULT_KERNELS,
    KernelSet,
    QuadratureConfig,
    gauss_legendre,
    regular_element_integral,
    strong_singular_integral,
    weak_singular_integral,
)

KIND_DISPLACEMENT = "displacement"
KIND_TRACTION = "traction"
DIRECTIONS = ("x", "y", "normal")

# Relative tolerance used when snapping parameters to knot values.
_PARAM_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryCondition:
    """One prescription: a field value of one kind on a parameter range.

    direction "normal" expands to a traction t = -value * n evaluated
    pointwise, which is how a constant pressure enters.
    """

    param_range: tuple[float, float]
    kind: str
    direction: str
    value: float

    def __post_init__(self):
        if self.kind not in (KIND_DISPLACEMENT, KIND_TRACTION):
            raise ValidationError(f"unknown BC kind {self.kind!r}")
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"unknown BC direction {self.direction!r}")
        if self.direction == "normal" and self.kind != KIND_TRACTION:
            raise ValidationError("direction 'normal' is only valid for tractions")
        lo, hi = self.param_range
        if not lo < hi:
            raise ValidationError(f"empty BC parameter range {self.param_range!r}")

    def covers_direction(self, j: int) -> bool:
        return self.direction == "normal" or self.direction == ("x", "y")[j]


def signed_area(curve: NurbsCurve, order: int = 16) -> float:
    """Signed area enclosed by the curve; positive for counter-clockwise."""
    table = curve.element_table()
    views = curve_elements(curve, table, lambda a: a)
    rule = gauss_legendre(order)
    total = 0.0
    for view in views:
        fr = view.frames(rule.points)
        cross = fr.points[:, 0] * fr.tangents[:, 1] - fr.points[:, 1] * fr.tangents[:, 0]
        total += 0.5 * float(cross @ rule.weights)
    return total


@dataclass(frozen=True)
class BemModel:
    """Analysis-ready problem: curve, element table, material and BCs."""

    curve: NurbsCurve
    material: Material
    bcs: tuple[BoundaryCondition, ...]
    elements: ElementTable
    analytic_reference: dict | None = None
    name: str = ""

    @classmethod
    def create(cls, curve, material, bcs, analytic_reference=None, name="") -> "BemModel":
        if not curve.closed:
            raise ModelError("the boundary of the material domain must be closed")
        area = signed_area(curve)
        if area <= 0.0:
            raise ModelError(
                f"curve must run counter-clockwise around the material "
                f"(signed area {area:.6g} <= 0)"
            )
        model = cls(
            curve=curve,
            material=material,
            bcs=tuple(bcs),
            elements=curve.element_table(),
            analytic_reference=analytic_reference,
            name=name,
        )
        # Fails early if any degree of freedom is not covered exactly once.
        lo, hi = curve.domain
        sides = basis_sides(curve.greville(), _PARAM_TOL * max(hi - lo, 1.0))
        count = model.dof_map.count
        resolve_governing_bcs(model, collocation_params(model), sides[:count])
        return model

    @property
    def dof_map(self) -> "DofMap":
        return DofMap(self.curve.n, self.curve.closed)


@dataclass(frozen=True)
class DofMap:
    """Global basis index -> degree-of-freedom column.

    For a closed curve the duplicated end basis function shares its
    coefficient with the first one, so the last index folds onto 0.
    """

    n_basis: int
    closed: bool

    @property
    def count(self) -> int:
        return self.n_basis - 1 if self.closed else self.n_basis

    def dof_of(self, basis: int) -> int:
        if self.closed and basis == self.n_basis - 1:
            return 0
        return int(basis)


@dataclass(frozen=True)
class CollocationPoint:
    """One collocation site with its owning elements.

    owners holds (element index, parent coordinate) pairs; junction points
    carry two owners, ordered (left element at +1, right element at -1).
    jump_owner selects which owner's basis receives the free-term columns:
    at a full-multiplicity junction two basis functions collocate at the
    same parameter and each row scatters the free term onto its own side.
    """

    index: int
    param: float
    point: np.ndarray
    owners: tuple[tuple[int, float], ...]
    jump_owner: int = 0


@dataclass(frozen=True)
class CollocationSet:
    params: np.ndarray
    points: np.ndarray
    entries: tuple[CollocationPoint, ...]

    def __len__(self) -> int:
        return len(self.entries)


def collocation_params(model: BemModel) -> np.ndarray:
    """Greville parameters, one per degree of freedom (closure duplicate dropped)."""
    grev = model.curve.greville()
    return grev[: model.dof_map.count]


def locate_collocation(curve: NurbsCurve) -> CollocationSet:
    """Greville collocation points with owning-element resolution.

    Every point lies on the curve by construction.  For a closed curve the
    first and last Greville parameters map to the same physical point and
    only one collocation entry is generated; its owners wrap around the
    closure so both adjacent elements treat it as their own singular point.
    """
    grev = curve.greville()
    table = curve.element_table()
    breaks = np.unique(curve.knots)
    lo, hi = curve.domain
    tol = _PARAM_TOL * max(hi - lo, 1.0)
    n_points = len(grev) - 1 if curve.closed else len(grev)
    last = len(table) - 1
    entries = []
    for a in range(n_points):
        t = float(grev[a])
        jump_owner = 0
        k = int(np.searchsorted(breaks, t + tol)) - 1
        k = min(max(k, 0), last)
        on_break = abs(t - breaks[k]) <= tol
        if on_break and k == 0:
            if curve.closed:
                owners = ((last, 1.0), (0, -1.0))
            else:
                owners = ((0, -1.0),)
        elif on_break:
            owners = ((k - 1, 1.0), (k, -1.0))
            # Second of a duplicated Greville pair: the right-side basis
            # collocates here too and carries the free term on its side.
            if a > 0 and abs(t - grev[a - 1]) <= tol:
                jump_owner = 1
        elif abs(t - breaks[k + 1]) <= tol:
            # Right end of the domain on an open curve.
            owners = ((k, 1.0),) if k == last else ((k, 1.0), (k + 1, -1.0))
        else:
            start, end = table.ranges[k]
            xi_hat = 2.0 * (t - start) / (end - start) - 1.0
            owners = ((k, float(xi_hat)),)
        entries.append(
            CollocationPoint(
                index=a,
                param=t,
                point=curve.point(t),
                owners=owners,
                jump_owner=jump_owner,
            )
        )
    params = np.array([e.param for e in entries])
    points = np.array([e.point for e in entries])
    return CollocationSet(params=params, points=points, entries=tuple(entries))


@dataclass
class DenseSystem:
    """Influence matrices plus the rearranged system and its bookkeeping."""

    H: np.ndarray
    G: np.ndarray
    dof_kinds: np.ndarray | None = None  # prescribed kind per DOF
    dof_values: np.ndarray | None = None  # prescribed coefficient per DOF
    A: np.ndarray | None = None
    z: np.ndarray | None = None

    def roundtrip_residual(self, disp_coeffs, trac_coeffs) -> float:
        """Relative residual of H d - G q, the rearrangement self-check."""
        hd = self.H @ disp_coeffs
        gq = self.G @ trac_coeffs
        scale = max(np.linalg.norm(hd), np.linalg.norm(gq), 1e-300)
        return float(np.linalg.norm(hd - gq) / scale)


def _element_metrics(views, order: int = 8):
    """Arc length and sample points per element, for near-field classification."""
    rule = gauss_legendre(order)
    lengths = np.empty(len(views))
    samples = []
    probe = np.linspace(-1.0, 1.0, 7)
    for i, view in enumerate(views):
        fr = view.frames(rule.points)
        lengths[i] = float(fr.jacobians @ rule.weights)
        samples.append(view.frames(probe).points)
    return lengths, samples


def assemble_rows(
    entries,
    views,
    material: Material,
    config: QuadratureConfig,
    kernels: KernelSet,
    n_dofs: int,
):
    """Shared assembly loop over collocation entries and element views.

    Each entry produces one 2-row block of H and G.  Ownership selects the
    singular routines; the remaining pairs use plain Gauss, at elevated
    order when the source sits within `near_distance_factor` element lengths
    of the element.  Rows are independent, so this loop could be partitioned
    over workers without any shared mutable state.
    """
    n_rows = 2 * len(entries)
    h_mat = np.zeros((n_rows, 2 * n_dofs))
    g_mat = np.zeros((n_rows, 2 * n_dofs))
    lengths, samples = _element_metrics(views)

    for entry in entries:
        rows = np.array([2 * entry.index, 2 * entry.index + 1])
        owners = dict(entry.owners)

        # Free term: wedge angles from the one-sided tangents at the point,
        # scattered onto the basis of the owner that carries the row.
        owner_frames = [
            views[e].frames(np.array([xi_hat])) for e, xi_hat in entry.owners
        ]
        t_in = owner_frames[0].tangents[0]
        t_out = owner_frames[-1].tangents[0]
        free = jump_term(*wedge_angles(t_in, t_out), material)
        owner_view = views[entry.owners[entry.jump_owner][0]]
        owner_shapes = owner_frames[entry.jump_owner].shapes[0]
        cols = _dof_columns(owner_view.dofs)
        block = (free[:, None, :] * owner_shapes[None, :, None]).reshape(2, -1)
        np.add.at(h_mat, (rows[:, None], cols[None, :]), block)

        for e, view in enumerate(views):
            if e in owners:
                h_sub = strong_singular_integral(
                    entry.point, view, material, config.sst, owners[e], kernels
                )
                g_sub = weak_singular_integral(
                    entry.point, view, material, config.telles, owners[e], kernels
                )
            else:
                dist = float(
                    np.min(np.linalg.norm(samples[e] - entry.point, axis=1))
                )
                order = (
                    config.near
                    if dist < config.near_distance_factor * lengths[e]
                    else config.regular
                )
                h_sub, g_sub = regular_element_integral(
                    entry.point, view, material, order, kernels
                )
            cols = _dof_columns(view.dofs)
            np.add.at(h_mat, (rows[:, None], cols[None, :]), h_sub)
            np.add.at(g_mat, (rows[:, None], cols[None, :]), g_sub)

    return h_mat, g_mat


def _dof_columns(dofs) -> np.ndarray:
    cols = np.empty(2 * len(dofs), dtype=int)
    cols[0::2] = 2 * np.asarray(dofs)
    cols[1::2] = cols[0::2] + 1
    return cols


def assemble(
    model: BemModel,
    colloc: CollocationSet,
    config: QuadratureConfig = QuadratureConfig(),
    kernels: KernelSet = DEFAULT_KERNELS,
) -> DenseSystem:
    """Assemble the H and G matrices of the model at the given collocation set."""
    dof_map = model.dof_map
    if len(colloc) != dof_map.count:
        raise ModelError(
            f"{len(colloc)} collocation points for {dof_map.count} DOF blocks"
        )
    views = curve_elements(model.curve, model.elements, dof_map.dof_of)
    h_mat, g_mat = assemble_rows(
        colloc.entries, views, model.material, config, kernels, dof_map.count
    )
    return DenseSystem(H=h_mat, G=g_mat)


# ---------------------------------------------------------------------------
# Boundary condition resolution and coefficient fitting
# ---------------------------------------------------------------------------


def resolve_governing_bcs(model: BemModel, params, sides=None) -> list:
    """Governing BC entry for every (collocation parameter, direction).

    Returns one ((bc, wrapped), (bc, wrapped)) pair per parameter, where
    `wrapped` flags a closed-curve closure match (the range touches the
    domain end while the parameter sits at the start).  A parameter is
    governed by the entry whose range contains it; on shared range
    boundaries ties break in favour of displacement prescriptions, then of
    the range lying to the left.  `sides` may pin individual parameters to
    the range ending ("left") or starting ("right") at them, which is how
    the two coincident basis functions of a full-multiplicity junction each
    follow their own side.  Anything other than exactly one winner is a
    validation error.
    """
    lo, hi = model.curve.domain
    tol = _PARAM_TOL * max(hi - lo, 1.0)
    knot_values = np.unique(model.curve.knots)
    for bc in model.bcs:
        for endpoint in bc.param_range:
            if np.min(np.abs(knot_values - endpoint)) > tol:
                raise ValidationError(
                    f"BC range {bc.param_range!r} does not align with knot values"
                )
    out = []
    for idx, t in enumerate(params):
        side = sides[idx] if sides is not None else None
        pair = []
        for j in range(2):
            candidates = []
            for bc in model.bcs:
                if not bc.covers_direction(j):
                    continue
                a, b = bc.param_range
                wraps = model.curve.closed and (
                    abs(t - lo) <= tol and abs(b - hi) <= tol
                )
                if not (a - tol <= t <= b + tol or wraps):
                    continue
                if side == "left" and not (abs(t - b) <= tol or wraps):
                    continue
                if side == "right" and not abs(t - a) <= tol:
                    continue
                candidates.append((bc, wraps))
            if not candidates:
                raise ValidationError(
                    f"no boundary condition covers parameter {t:.6g} "
                    f"direction {'xy'[j]}"
                )
            if len(candidates) > 1:
                disp = [c for c in candidates if c[0].kind == KIND_DISPLACEMENT]
                if len(disp) == 1:
                    candidates = disp
                else:
                    pool = disp if disp else candidates
                    # Left rule: the range ending at the point governs it;
                    # across the closure that is the range touching the end
                    # of the domain.
                    def sort_key(item):
                        bc, wraps = item
                        return -1.0 if wraps else bc.param_range[0]

                    pool = sorted(pool, key=sort_key)
                    if len(pool) > 1 and sort_key(pool[0]) == sort_key(pool[1]):
                        raise ValidationError(
                            f"parameter {t:.6g} direction {'xy'[j]} is covered "
                            f"by more than one prescription"
                        )
                    candidates = [pool[0]]
            pair.append(candidates[0])
        out.append(tuple(pair))
    return out


def basis_sides(grev, tol: float):
    """Side pins for duplicated Greville parameters.

    The first basis of a coincident pair lives left of the junction, the
    second right of it; all other bases are unpinned.
    """
    sides = [None] * len(grev)
    for a in range(len(grev) - 1):
        if abs(grev[a + 1] - grev[a]) <= tol:
            sides[a] = "left"
            sides[a + 1] = "right"
    return sides


def _one_sided_normal(model: BemModel, views, t: float, bc: BoundaryCondition):
    """Outward normal at parameter t evaluated from inside the BC's range."""
    lo, hi = model.curve.domain
    tol = _PARAM_TOL * max(hi - lo, 1.0)
    a, b = bc.param_range
    if model.curve.closed and abs(t - lo) <= tol and abs(b - hi) <= tol:
        t_eval = hi  # the range wraps to the closure point
    else:
        t_eval = t
    starts = np.array([v.xi_start for v in views])
    if abs(t_eval - b) <= tol:
        # Point at the right end of the range: evaluate from the left element.
        e = int(np.searchsorted(starts, t_eval - tol)) - 1
        xi_hat = 1.0
    else:
        e = int(np.searchsorted(starts, t_eval + tol)) - 1
        start, end = views[e].xi_start, views[e].xi_end
        xi_hat = 2.0 * (t_eval - start) / (end - start) - 1.0
    fr = views[e].frames(np.array([xi_hat]))
    return fr.normals[0]


def _range_fit(model: BemModel, views, bc: BoundaryCondition, j: int) -> dict[int, float]:
    """Fit the entry's field on its range into coefficient space.

    Collocates the bases supported on the range at their Greville parameters
    and solves the small square system; the field is the constant value, or
    -value * n_j evaluated pointwise for a pressure.  Evaluation at the
    range ends is pinned to the span inside the range, so coincident basis
    pairs at full-multiplicity junctions resolve to their own side.  Returns
    the coefficient per (unmerged) basis index.
    """
    curve = model.curve
    p = curve.degree
    lo, hi = curve.domain
    tol = _PARAM_TOL * max(hi - lo, 1.0)
    a, b = bc.param_range
    grev = curve.greville()
    members = [
        g
        for g in range(curve.n)
        if a - tol <= grev[g] <= b + tol
        and curve.knots[g] < b - tol
        and curve.knots[g + p + 1] > a + tol
    ]
    col_of = {g: k for k, g in enumerate(members)}
    size = len(members)
    fit = np.zeros((size, size))
    rhs = np.zeros(size)
    for row, g in enumerate(members):
        t = float(grev[g])
        if abs(t - b) <= tol:
            span = int(np.searchsorted(curve.knots, t, side="left")) - 1
        else:
            span = curve.span_of(t)
        values, first = curve.basis(t, span=span)
        for l, value in enumerate(values):
            col = col_of.get(first + l)
            if col is not None:
                fit[row, col] += value
        if bc.direction == "normal":
            normal = _one_sided_normal(model, views, t, bc)
            rhs[row] = -bc.value * normal[j]
        else:
            rhs[row] = bc.value
    coeffs = np.linalg.solve(fit, rhs)
    return {g: float(coeffs[k]) for k, g in enumerate(members)}


def prescribed_dof_data(model: BemModel, colloc: CollocationSet):
    """Per-DOF prescribed kind and coefficient value.

    Field values are converted to coefficient space by per-range
    interpolation at the Greville parameters (`_range_fit`); every degree of
    freedom then takes its coefficient from its governing entry's fit.  With
    C0 junctions the fits reproduce the field exactly at junctions because
    the basis is interpolatory there.
    """
    dof_map = model.dof_map
    m = dof_map.count
    lo, hi = model.curve.domain
    tol = _PARAM_TOL * max(hi - lo, 1.0)
    sides = basis_sides(model.curve.greville(), tol)
    governing = resolve_governing_bcs(model, colloc.params, sides[:m])
    views = curve_elements(model.curve, model.elements, dof_map.dof_of)

    fits: dict[tuple[int, int], dict[int, float]] = {}
    kinds = np.empty(2 * m, dtype=object)
    values = np.zeros(2 * m)
    for a in range(m):
        for j in range(2):
            bc, wrapped = governing[a][j]
            kinds[2 * a + j] = bc.kind
            key = (model.bcs.index(bc), j)
            if key not in fits:
                fits[key] = _range_fit(model, views, bc, j)
            # The closure DOF governed through the wrap reads the fit at the
            # duplicated end basis, whose Greville parameter is the domain end.
            basis = model.curve.n - 1 if (wrapped and a == 0) else a
            values[2 * a + j] = fits[key][basis]
    return kinds, values


def apply_bcs(system: DenseSystem, kinds, values) -> tuple[np.ndarray, np.ndarray]:
    """Rearrange H u = G t into A x = z for the prescribed data.

    Columns whose displacement coefficient is prescribed contribute -G to A
    (the traction is the unknown); traction-prescribed columns keep their H
    column.  Prescribed values move to the right-hand side with the opposite
    matrix.
    """
    kinds = np.asarray(kinds, dtype=object)
    values = np.asarray(values, dtype=float)
    n = system.H.shape[1]
    if kinds.shape != (n,) or values.shape != (n,):
        raise ModelError("need exactly one prescription per degree of freedom")
    disp_mask = kinds == KIND_DISPLACEMENT
    trac_mask = kinds == KIND_TRACTION
    if not np.all(disp_mask | trac_mask):
        raise ModelError("every DOF must carry a displacement or traction value")
    a_mat = np.where(trac_mask[None, :], system.H, -system.G)
    z = system.G[:, trac_mask] @ values[trac_mask] - system.H[:, disp_mask] @ values[disp_mask]
    system.dof_kinds = kinds
    system.dof_values = values
    system.A = a_mat
    system.z = z
    return a_mat, z


def solve_dense(a_mat: np.ndarray, z: np.ndarray, kinds=None) -> np.ndarray:
    """Direct dense solve with a residual guard of 1e-10 relative."""
    try:
        x = np.linalg.solve(a_mat, z)
    except np.linalg.LinAlgError as exc:
        raise SolverError(_rank_message(kinds)) from exc
    z_norm = float(np.linalg.norm(z))
    residual = float(np.linalg.norm(a_mat @ x - z))
    if z_norm > 0.0:
        residual /= z_norm
    if not np.isfinite(residual) or residual > 1e-10:
        raise SolverError(
            f"dense solve residual {residual:.3e} exceeds 1e-10; " + _rank_message(kinds)
        )
    return x


def _rank_message(kinds) -> str:
    if kinds is not None and np.all(np.asarray(kinds, dtype=object) == KIND_TRACTION):
        return (
            "system is singular: pure traction data leaves the rigid-body "
            "modes unconstrained"
        )
    return "system matrix is singular or severely ill-conditioned"


@dataclass(frozen=True)
class BoundarySolution:
    """Displacement/traction coefficient vectors with field evaluators.

    Coefficients are not nodal values; point values must be interpolated
    through the rational basis.
    """

    curve: NurbsCurve
    elements: ElementTable
    dof_map: DofMap
    disp_coeffs: np.ndarray
    trac_coeffs: np.ndarray

    @property
    def dof_count(self) -> int:
        return 2 * self.dof_map.count

    def _interpolate(self, coeffs, xi: float) -> np.ndarray:
        values, first = self.curve.basis(float(xi))
        out = np.zeros(2)
        for l, value in enumerate(values):
            dof = self.dof_map.dof_of(first + l)
            out += value * coeffs[2 * dof : 2 * dof + 2]
        return out

    def displacement(self, xi: float) -> np.ndarray:
        return self._interpolate(self.disp_coeffs, xi)

    def traction(self, xi: float) -> np.ndarray:
        return self._interpolate(self.trac_coeffs, xi)

    def l2_norm(self, order: int = 16) -> float:
        return l2_norm(self, order)


def recover_solution(
    model: BemModel, system: DenseSystem, x: np.ndarray
) -> BoundarySolution:
    """Scatter the solve vector and prescribed values back into full d, q."""
    kinds = system.dof_kinds
    values = system.dof_values
    disp_mask = kinds == KIND_DISPLACEMENT
    disp = np.where(disp_mask, values, x)
    trac = np.where(disp_mask, x, values)
    return BoundarySolution(
        curve=model.curve,
        elements=model.elements,
        dof_map=model.dof_map,
        disp_coeffs=disp,
        trac_coeffs=trac,
    )


def l2_norm(solution, order: int = 16) -> float:
    """Boundary L2 norm of the displacement field, sqrt(int |u|^2 dGamma)."""
    curve = solution.curve
    table = solution.elements
    views = curve_elements(curve, table, solution.dof_map.dof_of)
    rule = gauss_legendre(order)
    total = 0.0
    for view in views:
        fr = view.frames(rule.points)
        for k, w in enumerate(rule.weights):
            u = fr.shapes[k] @ _window_coeffs(solution, view)
            total += float(u @ u) * fr.jacobians[k] * w
    return math.sqrt(total)


def _window_coeffs(solution, view) -> np.ndarray:
    out = np.empty((view.n_shapes, 2))
    for l, dof in enumerate(view.dofs):
        out[l] = solution.disp_coeffs[2 * dof : 2 * dof + 2]
    return out


@dataclass(frozen=True)
class SolveReport:
    solution: BoundarySolution
    system: DenseSystem
    solve_residual: float
    roundtrip_residual: float


def solve_model(
    model: BemModel,
    config: QuadratureConfig = QuadratureConfig(),
    kernels: KernelSet = DEFAULT_KERNELS,
) -> SolveReport:
    """End-to-end solve: collocate, assemble, apply BCs, solve, recover."""
    colloc = locate_collocation(model.curve)
    system = assemble(model, colloc, config, kernels)
    kinds, values = prescribed_dof_data(model, colloc)
    a_mat, z = apply_bcs(system, kinds, values)
    x = solve_dense(a_mat, z, kinds)
    z_norm = float(np.linalg.norm(z))
    solve_residual = float(np.linalg.norm(a_mat @ x - z)) / (z_norm if z_norm > 0 else 1.0)
    solution = recover_solution(model, system, x)
    roundtrip = system.roundtrip_residual(solution.disp_coeffs, solution.trac_coeffs)
    return SolveReport(
        solution=solution,
        system=system,
        solve_residual=solve_residual,
        roundtrip_residual=roundtrip,
    )
