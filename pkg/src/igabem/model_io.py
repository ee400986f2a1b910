"""Model file parsing, validation and the bundled example problems.

Model files are schema-versioned JSON.  Numeric scalars may be written as
expression strings like "sqrt(2)/2" so rational-arc weights and exact knot
values survive the round trip without decimal truncation.
"""

from __future__ import annotations

import ast
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .errors import IgabemError, ValidationError
from .kernels import PLANE_STRAIN, PLANE_STRESS, Material
from .nurbs import NurbsCurve
from .quadrature import QuadratureConfig
from .solver import BemModel, BoundaryCondition

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "version",
    "name",
    "description",
    "degree",
    "knots",
    "control_points",
    "material",
    "boundary_conditions",
    "solver",
    "analytic_reference",
}
_MATERIAL_KEYS = {"shear_modulus", "youngs_modulus", "poisson", "regime"}
_BC_KEYS = {"param_range", "kind", "direction", "value"}
_SOLVER_KEYS = {"method", "quad_regular", "quad_near", "quad_telles", "quad_sst"}
_REFERENCE_KEYS = {"kind", "pressure", "inner_radius", "outer_radius"}

_ALLOWED_CALLS = {"sqrt": math.sqrt}
_ALLOWED_NAMES = {"pi": math.pi}


def parse_number(value) -> float:
    """Accept plain numbers or a small expression language ("sqrt(2)/2")."""
    if isinstance(value, bool):
        raise ValidationError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValidationError(f"expected a number, got {value!r}")
    try:
        tree = ast.parse(value, mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"cannot parse numeric expression {value!r}") from exc
    return _eval_node(tree.body, value)


def _eval_node(node, source: str) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.BinOp) and isinstance(
        node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
    ):
        left = _eval_node(node.left, source)
        right = _eval_node(node.right, source)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        return left**right
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        operand = _eval_node(node.operand, source)
        return operand if isinstance(node.op, ast.UAdd) else -operand
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        fn = _ALLOWED_CALLS.get(node.func.id)
        if fn is not None and len(node.args) == 1 and not node.keywords:
            return fn(_eval_node(node.args[0], source))
    if isinstance(node, ast.Name) and node.id in _ALLOWED_NAMES:
        return _ALLOWED_NAMES[node.id]
    raise ValidationError(f"unsupported numeric expression {source!r}")


@dataclass(frozen=True)
class SolverSettings:
    """Method selection and quadrature orders from the model file."""

    method: str = "igabem"
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def with_overrides(self, method=None, quad_regular=None, quad_singular=None):
        quad = self.quadrature
        if quad_regular is not None:
            quad = replace(quad, regular=int(quad_regular))
        if quad_singular is not None:
            quad = replace(
                quad, telles=int(quad_singular), sst=int(quad_singular)
            )
        return SolverSettings(
            method=method if method is not None else self.method, quadrature=quad
        )


def _reject_unknown(mapping: dict, allowed: set, context: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ValidationError(
            f"unknown key(s) {sorted(unknown)} in {context}; allowed: {sorted(allowed)}"
        )


def parse_document(doc: dict, source: str = "<document>") -> tuple[BemModel, SolverSettings]:
    """Validate a parsed model document and build the analysis-ready model."""
    if not isinstance(doc, dict):
        raise ValidationError(f"{source}: model document must be an object")
    _reject_unknown(doc, _TOP_KEYS, source)
    if doc.get("version") != SCHEMA_VERSION:
        raise ValidationError(
            f"{source}: unsupported schema version {doc.get('version')!r} "
            f"(expected {SCHEMA_VERSION})"
        )
    for key in ("degree", "knots", "control_points", "material", "boundary_conditions"):
        if key not in doc:
            raise ValidationError(f"{source}: missing required key {key!r}")

    degree = doc["degree"]
    if not isinstance(degree, int) or degree < 1:
        raise ValidationError(f"{source}: degree must be a positive integer")
    knots = np.array([parse_number(v) for v in doc["knots"]])
    rows = doc["control_points"]
    if not rows or any(len(r) != 3 for r in rows):
        raise ValidationError(f"{source}: control_points must be rows of [x, y, w]")
    points = np.array([[parse_number(r[0]), parse_number(r[1])] for r in rows])
    weights = np.array([parse_number(r[2]) for r in rows])

    mat_doc = doc["material"]
    _reject_unknown(mat_doc, _MATERIAL_KEYS, f"{source}: material")
    if "poisson" not in mat_doc:
        raise ValidationError(f"{source}: material requires 'poisson'")
    poisson = parse_number(mat_doc["poisson"])
    regime = mat_doc.get("regime", PLANE_STRAIN)
    if regime not in (PLANE_STRAIN, PLANE_STRESS):
        raise ValidationError(f"{source}: unknown material regime {regime!r}")
    if "shear_modulus" in mat_doc:
        material = Material(parse_number(mat_doc["shear_modulus"]), poisson, regime)
    elif "youngs_modulus" in mat_doc:
        material = Material.from_youngs(
            parse_number(mat_doc["youngs_modulus"]), poisson, regime
        )
    else:
        raise ValidationError(
            f"{source}: material requires shear_modulus or youngs_modulus"
        )

    bcs = []
    for i, entry in enumerate(doc["boundary_conditions"]):
        _reject_unknown(entry, _BC_KEYS, f"{source}: boundary_conditions[{i}]")
        try:
            rng = entry["param_range"]
            bcs.append(
                BoundaryCondition(
                    param_range=(parse_number(rng[0]), parse_number(rng[1])),
                    kind=entry["kind"],
                    direction=entry["direction"],
                    value=parse_number(entry["value"]),
                )
            )
        except KeyError as exc:
            raise ValidationError(
                f"{source}: boundary_conditions[{i}] missing {exc}"
            ) from exc

    reference = doc.get("analytic_reference")
    if reference is not None:
        _reject_unknown(reference, _REFERENCE_KEYS, f"{source}: analytic_reference")
        if reference.get("kind") != "pressurised_annulus":
            raise ValidationError(
                f"{source}: unknown analytic_reference kind "
                f"{reference.get('kind')!r}"
            )
        reference = {
            "kind": "pressurised_annulus",
            "pressure": parse_number(reference["pressure"]),
            "inner_radius": parse_number(reference["inner_radius"]),
            "outer_radius": parse_number(reference["outer_radius"]),
        }

    solver_doc = doc.get("solver", {})
    _reject_unknown(solver_doc, _SOLVER_KEYS, f"{source}: solver")
    method = solver_doc.get("method", "igabem")
    if method not in ("igabem", "lagrange"):
        raise ValidationError(f"{source}: unknown solver method {method!r}")
    quad = QuadratureConfig(
        regular=int(solver_doc.get("quad_regular", 12)),
        near=int(solver_doc.get("quad_near", 24)),
        telles=int(solver_doc.get("quad_telles", 16)),
        sst=int(solver_doc.get("quad_sst", 16)),
    )

    try:
        curve = NurbsCurve.create(degree, knots, points, weights)
        model = BemModel.create(
            curve,
            material,
            bcs,
            analytic_reference=reference,
            name=doc.get("name", ""),
        )
    except IgabemError as exc:
        raise ValidationError(f"{source}: {exc}") from exc
    return model, SolverSettings(method=method, quadrature=quad)


def load_model(path) -> tuple[BemModel, SolverSettings]:
    """Parse and validate a model file; errors carry file/line context."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_document(doc, source=str(path))


def model_document(model: BemModel, settings: SolverSettings) -> dict:
    """Serialise a model back into its file form (values, not expressions)."""
    doc = {
        "version": SCHEMA_VERSION,
        "degree": int(model.curve.degree),
        "knots": [float(v) for v in model.curve.knots],
        "control_points": [
            [float(x), float(y), float(w)]
            for (x, y), w in zip(model.curve.points, model.curve.weights)
        ],
        "material": {
            "shear_modulus": model.material.shear_modulus,
            "poisson": model.material.poisson,
            "regime": model.material.regime,
        },
        "boundary_conditions": [
            {
                "param_range": [float(bc.param_range[0]), float(bc.param_range[1])],
                "kind": bc.kind,
                "direction": bc.direction,
                "value": float(bc.value),
            }
            for bc in model.bcs
        ],
        "solver": {
            "method": settings.method,
            "quad_regular": settings.quadrature.regular,
            "quad_near": settings.quadrature.near,
            "quad_telles": settings.quadrature.telles,
            "quad_sst": settings.quadrature.sst,
        },
    }
    if model.name:
        doc["name"] = model.name
    if model.analytic_reference is not None:
        doc["analytic_reference"] = dict(model.analytic_reference)
    return doc


def write_model(path, model: BemModel, settings: SolverSettings) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(model_document(model, settings), handle, indent=2)
        handle.write("\n")


def bundled_model_names() -> list[str]:
    root = resources.files("igabem").joinpath("data")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> tuple[BemModel, SolverSettings]:
    """Load one of the models shipped with the package."""
    path = resources.files("igabem").joinpath("data", f"{name}.json")
    if not path.is_file():
        raise ValidationError(
            f"no bundled model {name!r}; available: {bundled_model_names()}"
        )
    doc = json.loads(path.read_text(encoding="utf-8"))
    return parse_document(doc, source=f"bundled:{name}")
