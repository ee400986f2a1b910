"""Conventional collocation BEM with continuous quadratic Lagrange elements.

The comparison discretisation: nodes are sampled on the exact curve, element
geometry is interpolated isoparametrically through them with the standard
quadratic shapes, and collocation happens at the nodes where the basis is
interpolatory.  Kernels, singular quadrature and the assembly loop are the
ones used by the isogeometric path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .nurbs import ElementFrames
from .quadrature import DEFAULT_KERNELS, KernelSet, QuadratureConfig, gauss_legendre
from .solver import (
    KIND_DISPLACEMENT,
    BemModel,
    CollocationPoint,
    DenseSystem,
    apply_bcs,
    assemble_rows,
    resolve_governing_bcs,
    solve_dense,
)


def lagrange_shape(eta: float) -> np.ndarray:
    """Quadratic Lagrange shapes (N1, N2, N3) on [-1, 1], nodal at -1, 0, +1."""
    return np.array(
        [0.5 * eta * (eta - 1.0), 1.0 - eta * eta, 0.5 * eta * (eta + 1.0)]
    )


def lagrange_shape_derivs(eta: float) -> np.ndarray:
    return np.array([eta - 0.5, -2.0 * eta, eta + 0.5])


@dataclass(frozen=True)
class LagrangeMesh:
    """Quadratic element mesh sampled from a NURBS curve.

    Nodes lie on the exact curve and remember their originating parameters;
    element geometry between them is the quadratic interpolant, so geometry
    error comes only from the polynomial element shape.
    """

    nodes: np.ndarray  # (k, 2)
    params: np.ndarray  # (k,)
    elements: np.ndarray  # (n_el, 3) node indices
    closed: bool

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def generate_mesh(curve, elements_per_span: int) -> LagrangeMesh:
    """Sample a continuous quadratic mesh, `elements_per_span` per knot span.

    Node parameters advance in equal increments within each span, so C0
    junction parameters always receive a node and corners are honoured.
    """
    if elements_per_span < 1:
        raise ModelError("need at least one element per knot span")
    breaks = np.unique(curve.knots)
    params = []
    for s, f in zip(breaks[:-1], breaks[1:]):
        local = np.linspace(s, f, 2 * elements_per_span + 1)
        params.extend(local[:-1])
    params.append(breaks[-1])
    params = np.array(params)
    nodes = np.array([curve.point(t) for t in params])
    n_el = (len(params) - 1) // 2
    elements = np.empty((n_el, 3), dtype=int)
    for e in range(n_el):
        elements[e] = (2 * e, 2 * e + 1, 2 * e + 2)
    if curve.closed:
        elements[-1, 2] = 0
        nodes = nodes[:-1]
        params = params[:-1]
    return LagrangeMesh(nodes=nodes, params=params, elements=elements, closed=curve.closed)


@dataclass(frozen=True)
class LagrangeElement:
    """Integration view of one quadratic element (isoparametric geometry)."""

    index: int
    node_xy: np.ndarray  # (3, 2)
    dofs: np.ndarray  # (3,) node indices

    @property
    def n_shapes(self) -> int:
        return 3

    def frames(self, etas):
        etas = np.atleast_1d(np.asarray(etas, dtype=float))
        m = len(etas)
        points = np.empty((m, 2))
        tangents = np.empty((m, 2))
        shapes = np.empty((m, 3))
        for i, eta in enumerate(etas):
            shape = lagrange_shape(eta)
            shapes[i] = shape
            points[i] = shape @ self.node_xy
            tangents[i] = lagrange_shape_derivs(eta) @ self.node_xy
        jac = np.linalg.norm(tangents, axis=1)
        normals = np.column_stack([tangents[:, 1], -tangents[:, 0]]) / jac[:, None]
        return ElementFrames(points, tangents, normals, jac, shapes)


def mesh_elements(mesh: LagrangeMesh) -> list[LagrangeElement]:
    return [
        LagrangeElement(index=e, node_xy=mesh.nodes[row], dofs=row.copy())
        for e, row in enumerate(mesh.elements)
    ]


def _node_collocation(mesh: LagrangeMesh) -> list[CollocationPoint]:
    """Collocate at every node; end nodes own both adjacent elements."""
    n_el = len(mesh.elements)
    entries = []
    for node in range(mesh.n_nodes):
        if node % 2 == 1:
            owners = ((node // 2, 0.0),)
        else:
            right = node // 2
            if node == 0 and not mesh.closed:
                owners = ((0, -1.0),)
            elif right >= n_el:
                owners = ((n_el - 1, 1.0),)
            else:
                owners = (((right - 1) % n_el, 1.0), (right, -1.0))
        entries.append(
            CollocationPoint(
                index=node,
                param=float(mesh.params[node]),
                point=mesh.nodes[node].copy(),
                owners=owners,
            )
        )
    return entries


@dataclass(frozen=True)
class LagrangeSolution:
    """Nodal displacement/traction vectors; nodal values are field values."""

    mesh: LagrangeMesh
    curve: object
    disp_nodal: np.ndarray  # (2k,)
    trac_nodal: np.ndarray

    @property
    def dof_count(self) -> int:
        return 2 * self.mesh.n_nodes

    def _element_of(self, xi: float) -> tuple[int, float]:
        n_el = len(self.mesh.elements)
        starts = self.mesh.params[0::2][:n_el]
        domain_end = float(self.curve.domain[1])
        e = int(np.searchsorted(starts, xi, side="right")) - 1
        e = min(max(e, 0), n_el - 1)
        start = float(starts[e])
        end = float(starts[e + 1]) if e + 1 < n_el else domain_end
        eta = 2.0 * (xi - start) / (end - start) - 1.0
        return e, float(np.clip(eta, -1.0, 1.0))

    def _interpolate(self, nodal, xi: float) -> np.ndarray:
        e, eta = self._element_of(float(xi))
        shape = lagrange_shape(eta)
        out = np.zeros(2)
        for l, node in enumerate(self.mesh.elements[e]):
            out += shape[l] * nodal[2 * node : 2 * node + 2]
        return out

    def displacement(self, xi: float) -> np.ndarray:
        return self._interpolate(self.disp_nodal, xi)

    def traction(self, xi: float) -> np.ndarray:
        return self._interpolate(self.trac_nodal, xi)

    def l2_norm(self, order: int = 16) -> float:
        """Boundary L2 norm over the mesh's own (isoparametric) geometry."""
        rule = gauss_legendre(order)
        total = 0.0
        for view in mesh_elements(self.mesh):
            fr = view.frames(rule.points)
            coeffs = np.array(
                [self.disp_nodal[2 * n : 2 * n + 2] for n in view.dofs]
            )
            for k, w in enumerate(rule.weights):
                u = fr.shapes[k] @ coeffs
                total += float(u @ u) * fr.jacobians[k] * w
        return math.sqrt(total)


def _nodal_bc_data(model: BemModel, mesh: LagrangeMesh, views):
    """Prescribed kind and value per nodal DOF.

    Nodal shapes are interpolatory, so field values apply directly; pressure
    tractions use the isoparametric element normal evaluated from inside the
    governing range.
    """
    governing = resolve_governing_bcs(model, mesh.params)
    lo, hi = model.curve.domain
    tol = 1e-12 * max(hi - lo, 1.0)
    k = mesh.n_nodes
    kinds = np.empty(2 * k, dtype=object)
    values = np.zeros(2 * k)
    n_el = len(mesh.elements)
    for node in range(k):
        t = float(mesh.params[node])
        for j in range(2):
            bc, wrapped = governing[node][j]
            kinds[2 * node + j] = bc.kind
            if bc.direction == "normal":
                _, b = bc.param_range
                if node % 2 == 1:
                    e, eta = node // 2, 0.0
                else:
                    right = node // 2
                    if abs(t - b) <= tol or wrapped or right >= n_el:
                        e, eta = (right - 1) % n_el, 1.0
                    else:
                        e, eta = right, -1.0
                normal = views[e].frames(np.array([eta])).normals[0]
                values[2 * node + j] = -bc.value * normal[j]
            else:
                values[2 * node + j] = bc.value
    return kinds, values


@dataclass(frozen=True)
class LagrangeReport:
    solution: LagrangeSolution
    system: DenseSystem
    solve_residual: float
    roundtrip_residual: float


def conventional_solve(
    model: BemModel,
    elements_per_span: int = 1,
    config: QuadratureConfig = QuadratureConfig(),
    kernels: KernelSet = DEFAULT_KERNELS,
) -> LagrangeReport:
    """Solve the model with the conventional quadratic-element BEM."""
    mesh = generate_mesh(model.curve, elements_per_span)
    views = mesh_elements(mesh)
    entries = _node_collocation(mesh)
    h_mat, g_mat = assemble_rows(
        entries, views, model.material, config, kernels, mesh.n_nodes
    )
    system = DenseSystem(H=h_mat, G=g_mat)
    kinds, values = _nodal_bc_data(model, mesh, views)
    a_mat, z = apply_bcs(system, kinds, values)
    x = solve_dense(a_mat, z, kinds)
    z_norm = float(np.linalg.norm(z))
    solve_residual = float(np.linalg.norm(a_mat @ x - z)) / (z_norm if z_norm > 0 else 1.0)
    disp_mask = kinds == KIND_DISPLACEMENT
    disp = np.where(disp_mask, values, x)
    trac = np.where(disp_mask, x, values)
    solution = LagrangeSolution(
        mesh=mesh, curve=model.curve, disp_nodal=disp, trac_nodal=trac
    )
    roundtrip = system.roundtrip_residual(disp, trac)
    return LagrangeReport(
        solution=solution,
        system=system,
        solve_residual=solve_residual,
        roundtrip_residual=roundtrip,
    )
