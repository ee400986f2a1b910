"""2D elastostatic fundamental solutions, corner free terms, surface frames.

The displacement kernel U and traction kernel T are the plane-strain point
load solutions; plane stress is handled everywhere through the effective
Poisson ratio nu_bar = nu / (1 + nu).  Boundary curves are expected to run
counter-clockwise around the material so that n = (dy, -dx)/|dC/dxi| points
out of the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ModelError, SingularityError
from .nurbs import NurbsCurve

PLANE_STRAIN = "plane-strain"
PLANE_STRESS = "plane-stress"


@dataclass(frozen=True)
class Material:
    """Isotropic linear elastic material in a 2D regime."""

    shear_modulus: float
    poisson: float
    regime: str = PLANE_STRAIN

    def __post_init__(self):
        if self.shear_modulus <= 0.0:
            raise ModelError("shear modulus must be positive")
        if not -1.0 < self.poisson < 0.5:
            raise ModelError("Poisson ratio must lie in (-1, 0.5)")
        if self.regime not in (PLANE_STRAIN, PLANE_STRESS):
            raise ModelError(f"unknown regime {self.regime!r}")

    @property
    def nu_bar(self) -> float:
        """Effective Poisson ratio: nu for plane strain, nu/(1+nu) for plane stress."""
        if self.regime == PLANE_STRAIN:
            return self.poisson
        return self.poisson / (1.0 + self.poisson)

    @classmethod
    def from_youngs(cls, youngs_modulus: float, poisson: float, regime: str = PLANE_STRAIN):
        return cls(youngs_modulus / (2.0 * (1.0 + poisson)), poisson, regime)


def _separations(x_src, x_fld):
    x_src = np.asarray(x_src, dtype=float)
    x_fld = np.atleast_2d(np.asarray(x_fld, dtype=float))
    d = x_fld - x_src
    r = np.linalg.norm(d, axis=1)
    scale = max(float(np.abs(x_fld).max()), float(np.abs(x_src).max()), 1.0)
    if np.any(r <= 1e-14 * scale):
        raise SingularityError(
            "field point coincides with the source point; "
            "route this pair through the singular quadrature"
        )
    return d, r


def kelvin_u_batch(x_src, x_fld, material: Material) -> np.ndarray:
    """Displacement kernel U_ij at field points x_fld, shape (m, 2, 2)."""
    d, r = _separations(x_src, x_fld)
    nu = material.nu_bar
    dr = d / r[:, None]
    c = 1.0 / (8.0 * math.pi * material.shear_modulus * (1.0 - nu))
    log_term = (3.0 - 4.0 * nu) * np.log(1.0 / r)
    out = dr[:, :, None] * dr[:, None, :]
    out[:, 0, 0] += log_term
    out[:, 1, 1] += log_term
    return c * out


def kelvin_t_batch(x_src, x_fld, normals, material: Material) -> np.ndarray:
    """Traction kernel T_ij at field points with unit normals, shape (m, 2, 2)."""
    d, r = _separations(x_src, x_fld)
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    nu = material.nu_bar
    dr = d / r[:, None]
    drdn = np.einsum("mi,mi->m", dr, normals)
    two_nu = 1.0 - 2.0 * nu
    sym = dr[:, :, None] * dr[:, None, :] * 2.0
    sym[:, 0, 0] += two_nu
    sym[:, 1, 1] += two_nu
    anti = dr[:, :, None] * normals[:, None, :] - normals[:, :, None] * dr[:, None, :]
    c = -1.0 / (4.0 * math.pi * (1.0 - nu) * r)
    return c[:, None, None] * (drdn[:, None, None] * sym - two_nu * anti)


def kelvin_u(x_src, x_fld, material: Material) -> np.ndarray:
    """Displacement fundamental solution for a single source/field pair."""
    return kelvin_u_batch(x_src, np.asarray(x_fld, dtype=float)[None, :], material)[0]


def kelvin_t(x_src, x_fld, normal, material: Material) -> np.ndarray:
    """Traction fundamental solution for a single source/field pair."""
    return kelvin_t_batch(
        x_src,
        np.asarray(x_fld, dtype=float)[None, :],
        np.asarray(normal, dtype=float)[None, :],
        material,
    )[0]


def traction_singular_coefficient(unit_tangent, unit_normal, material: Material) -> np.ndarray:
    """First-order Laurent coefficient of T along the boundary.

    Approaching the source along the curve, T_ij ~ S_ij / (J * (xi_hat -
    xi_hat')) with S the antisymmetric matrix returned here.  Only the
    (1-2nu)(r_,i n_j - r_,j n_i) part of the kernel survives the limit; the
    dr/dn part is one order smoother.
    """
    t = np.asarray(unit_tangent, dtype=float)
    n = np.asarray(unit_normal, dtype=float)
    nu = material.nu_bar
    cross = t[0] * n[1] - t[1] * n[0]
    c = (1.0 - 2.0 * nu) / (4.0 * math.pi * (1.0 - nu))
    return c * cross * np.array([[0.0, 1.0], [-1.0, 0.0]])


def wedge_angles(t_in, t_out) -> tuple[float, float]:
    """Interior wedge angles (theta1, theta2) at a boundary point.

    theta2 is the angle of the outgoing tangent, theta1 the angle of the
    reversed incoming tangent, normalised so theta1 - theta2 in (0, 2*pi] is
    the interior opening angle.  A smooth point gives theta1 - theta2 = pi.
    """
    t_in = np.asarray(t_in, dtype=float)
    t_out = np.asarray(t_out, dtype=float)
    theta2 = math.atan2(t_out[1], t_out[0])
    theta1 = math.atan2(-t_in[1], -t_in[0])
    while theta1 <= theta2 + 1e-14:
        theta1 += 2.0 * math.pi
    return theta1, theta2


def jump_term(theta1: float, theta2: float, material: Material) -> np.ndarray:
    """Free-term matrix C_ij of the boundary integral equation.

    The angles bound the interior wedge at the collocation point as produced
    by `wedge_angles`; for a smooth boundary the result is 0.5 * I, at
    corners it depends on the opening angle and nu_bar.
    """
    nu = material.nu_bar
    c = 1.0 / (8.0 * math.pi * (1.0 - nu))
    dtheta = theta1 - theta2
    sin_diff = math.sin(2.0 * theta1) - math.sin(2.0 * theta2)
    cos_diff = math.cos(2.0 * theta2) - math.cos(2.0 * theta1)
    return c * np.array(
        [
            [4.0 * (1.0 - nu) * dtheta + sin_diff, cos_diff],
            [cos_diff, 4.0 * (1.0 - nu) * dtheta - sin_diff],
        ]
    )


@dataclass(frozen=True)
class SurfaceFrame:
    """Geometric quantities of the boundary at one parameter value."""

    point: np.ndarray
    tangent: np.ndarray  # dC/dxi
    normal: np.ndarray  # unit outward normal
    jacobian_param: float  # dGamma/dxi
    jacobian_parent: float  # dxi/dxi_hat


def surface_frame(curve: NurbsCurve, element_range, xi_hat: float) -> SurfaceFrame:
    """Evaluate the surface frame of `curve` at parent coordinate xi_hat.

    The span is pinned to the element, so xi_hat = -1/+1 produce one-sided
    limits at junctions.
    """
    start, end = float(element_range[0]), float(element_range[1])
    span = curve.span_of(0.5 * (start + end))
    xi = start + 0.5 * (xi_hat + 1.0) * (end - start)
    table, first = curve.basis_derivs(xi, 1, span=span)
    ctrl = curve.points[first : first + curve.degree + 1]
    point = table[0] @ ctrl
    tangent = table[1] @ ctrl
    jac = float(np.linalg.norm(tangent))
    scale = max(float(np.abs(ctrl).max()), 1.0)
    if jac <= 1e-14 * scale:
        raise GeometryError(f"zero tangent at parameter {xi!r}")
    normal = np.array([tangent[1], -tangent[0]]) / jac
    return SurfaceFrame(point, tangent, normal, jac, 0.5 * (end - start))
