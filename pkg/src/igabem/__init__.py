"""2D isogeometric boundary element solver for linear elastostatics.

The CAD description of the boundary (a NURBS curve) is used directly as the
analysis discretisation: the rational basis carries both the exact geometry
and the unknown displacement/traction fields of the boundary integral
equation.  A conventional quadratic-element BEM sharing the same kernels and
quadrature is included for comparison studies.
"""

from .errors import (
    ConfigError,
    DomainError,
    GeometryError,
    IgabemError,
    ModelError,
    RefinementError,
    SingularityError,
    SolverError,
    ValidationError,
)
from .kernels import (
    Material,
    SurfaceFrame,
    jump_term,
    kelvin_t,
    kelvin_u,
    surface_frame,
    wedge_angles,
)
from .lagrange import (
    LagrangeMesh,
    conventional_solve,
    generate_mesh,
    lagrange_shape,
    lagrange_shape_derivs,
)
from .model_io import (
    SolverSettings,
    load_bundled,
    load_model,
    model_document,
    parse_number,
    write_model,
)
from .nurbs import (
    ElementTable,
    NurbsCurve,
    bspline_basis,
    bspline_derivs,
    build_connectivity,
    element_ranges,
    elevate_order,
    find_span,
    greville_abscissae,
    insert_knot,
)
from .quadrature import (
    QuadratureConfig,
    QuadratureRule,
    gauss_legendre,
    regular_element_integral,
    strong_singular_integral,
    telles_map,
    weak_singular_integral,
)
from .solver import (
    BemModel,
    BoundaryCondition,
    BoundarySolution,
    CollocationSet,
    DenseSystem,
    apply_bcs,
    assemble,
    l2_norm,
    locate_collocation,
    prescribed_dof_data,
    recover_solution,
    solve_dense,
    solve_model,
)
from .study import (
    ConvergenceRecord,
    matched_dof_pairs,
    refine_model,
    relative_l2_difference,
    run_convergence,
    run_solve,
)

__version__ = "0.1.0"

__all__ = [
    "BemModel",
    "BoundaryCondition",
    "BoundarySolution",
    "CollocationSet",
    "ConfigError",
    "ConvergenceRecord",
    "DenseSystem",
    "DomainError",
    "ElementTable",
    "GeometryError",
    "IgabemError",
    "LagrangeMesh",
    "Material",
    "ModelError",
    "NurbsCurve",
    "QuadratureConfig",
    "QuadratureRule",
    "RefinementError",
    "SingularityError",
    "SolverError",
    "SolverSettings",
    "SurfaceFrame",
    "ValidationError",
    "apply_bcs",
    "assemble",
    "bspline_basis",
    "bspline_derivs",
    "build_connectivity",
    "conventional_solve",
    "element_ranges",
    "elevate_order",
    "find_span",
    "gauss_legendre",
    "generate_mesh",
    "greville_abscissae",
    "insert_knot",
    "jump_term",
    "kelvin_t",
    "kelvin_u",
    "l2_norm",
    "lagrange_shape",
    "lagrange_shape_derivs",
    "load_bundled",
    "load_model",
    "locate_collocation",
    "matched_dof_pairs",
    "model_document",
    "parse_number",
    "prescribed_dof_data",
    "recover_solution",
    "refine_model",
    "regular_element_integral",
    "relative_l2_difference",
    "run_convergence",
    "run_solve",
    "solve_dense",
    "solve_model",
    "strong_singular_integral",
    "surface_frame",
    "telles_map",
    "weak_singular_integral",
    "wedge_angles",
]
