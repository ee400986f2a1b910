"""Gauss-Legendre rules and the singular boundary element integrals.

Weakly singular (log) integrands are regularised with the Telles cubic
transformation, applied on each side of the singularity so that it always
sits at a sub-interval end where the transformation clusters points
natively.  Strongly singular integrands go through subtraction of
singularity: the first-order Laurent term is removed, integrated
analytically as a Cauchy principal value, and the bounded remainder is
integrated with panel Gauss rules.

Element views are duck-typed: anything with `n_shapes`, `frames(xi_hats)`
and `parent_jacobian`-consistent jacobians works, which lets the NURBS and
Lagrange discretisations share this module unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .kernels import (
    Material,
    kelvin_t_batch,
    kelvin_u_batch,
    traction_singular_coefficient,
)

MAX_GAUSS_ORDER = 64


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> QuadratureRule:
    """Standard Gauss-Legendre rule on [-1, 1]."""
    if not 1 <= order <= MAX_GAUSS_ORDER:
        raise ConfigError(
            f"Gauss order {order} unsupported (must be 1..{MAX_GAUSS_ORDER})"
        )
    points, weights = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(points, weights)


def telles_singular_abscissa(xi_hat_src: float) -> float:
    """Location gamma' that the cubic map sends to the singularity xi_hat'.

    Real root of the defining cubic; the printed closed form keeps the
    additive xi_hat' outside the second cube root so that gamma'(+-1) = +-1.
    """
    xs = float(xi_hat_src)
    return float(
        np.cbrt((xs - 1.0) ** 2 * (xs + 1.0))
        + np.cbrt((xs - 1.0) * (xs + 1.0) ** 2)
        + xs
    )


def telles_map(gamma, xi_hat_src: float):
    """Cubic transformation xi_hat(gamma) and its jacobian d xi_hat/d gamma.

    The jacobian vanishes quadratically at gamma', which cancels a
    logarithmic singularity at xi_hat' and maps both interval ends to
    themselves.
    """
    gamma = np.asarray(gamma, dtype=float)
    gp = telles_singular_abscissa(xi_hat_src)
    denom = 1.0 + 3.0 * gp * gp
    xi_hat = ((gamma - gp) ** 3 + gp * (gp * gp + 3.0)) / denom
    jacobian = 3.0 * (gamma - gp) ** 2 / denom
    return xi_hat, jacobian


@dataclass(frozen=True)
class QuadratureConfig:
    """Gauss orders for the integral classes plus the near-field rule."""

    regular: int = 12
    near: int = 24
    telles: int = 16
    sst: int = 16
    near_distance_factor: float = 2.0

    def __post_init__(self):
        for name in ("regular", "near", "telles", "sst"):
            order = getattr(self, name)
            if not 1 <= order <= MAX_GAUSS_ORDER:
                raise ConfigError(f"quadrature order {name}={order} out of range")


@dataclass(frozen=True)
class KernelSet:
    """Injectable kernel bundle; tests may substitute constant kernels."""

    displacement: callable = kelvin_u_batch
    traction: callable = kelvin_t_batch
    traction_residue: callable = traction_singular_coefficient


DEFAULT_KERNELS = KernelSet()


def _zero_kernel_u(x_src, x_fld, material):
    return np.zeros((len(np.atleast_2d(x_fld)), 2, 2))


def _zero_kernel_t(x_src, x_fld, normals, material):
    return np.zeros((len(np.atleast_2d(x_fld)), 2, 2))


def _zero_residue(unit_tangent, unit_normal, material):
    return np.zeros((2, 2))


ZERO_KERNELS = KernelSet(_zero_kernel_u, _zero_kernel_t, _zero_residue)


def _unit_kernel_u(x_src, x_fld, material):
    return np.ones((len(np.atleast_2d(x_fld)), 2, 2))


def _unit_kernel_t(x_src, x_fld, normals, material):
    return np.ones((len(np.atleast_2d(x_fld)), 2, 2))


UNIT_KERNELS = KernelSet(_unit_kernel_u, _unit_kernel_t, _zero_residue)


def _accumulate(kernel_values, shapes, weights):
    """Sum w_m * K_m,ij * N_m,l into a (2, 2*n_shapes) block ordered (l, j)."""
    block = np.einsum("mij,ml,m->ilj", kernel_values, shapes, weights)
    return block.reshape(2, -1)


def regular_element_integral(
    x_src,
    element,
    material: Material,
    order: int,
    kernels: KernelSet = DEFAULT_KERNELS,
):
    """Plain Gauss-Legendre element integrals of T N J and U N J.

    Valid only when the collocation point does not lie on the element; a
    vanishing separation raises SingularityError from the kernels signalling
    a misclassified pair.
    """
    rule = gauss_legendre(order)
    fr = element.frames(rule.points)
    t_vals = kernels.traction(x_src, fr.points, fr.normals, material)
    u_vals = kernels.displacement(x_src, fr.points, material)
    weights = rule.weights * fr.jacobians
    return _accumulate(t_vals, fr.shapes, weights), _accumulate(
        u_vals, fr.shapes, weights
    )


def _split_panels(xi_hat_src: float):
    """Sub-intervals of [-1, 1] meeting at the singularity (empty sides dropped)."""
    panels = []
    if xi_hat_src > -1.0:
        panels.append((-1.0, float(xi_hat_src), +1.0))  # singularity at right end
    if xi_hat_src < 1.0:
        panels.append((float(xi_hat_src), 1.0, -1.0))  # singularity at left end
    return panels


def weak_singular_integral(
    x_src,
    element,
    material: Material,
    order: int,
    xi_hat_src: float,
    kernels: KernelSet = DEFAULT_KERNELS,
):
    """Log-singular element integral of U N J via per-side Telles rules.

    The element is split at the singularity; each side is mapped to [-1, 1]
    with the singular point at a sub-interval end, where the Telles jacobian
    clusters Gauss points most effectively.
    """
    rule = gauss_legendre(order)
    g_sub = np.zeros((2, 2 * element.n_shapes))
    for a, b, end in _split_panels(xi_hat_src):
        mapped, telles_jac = telles_map(rule.points, end)
        xi_hats = a + 0.5 * (mapped + 1.0) * (b - a)
        fr = element.frames(xi_hats)
        u_vals = kernels.displacement(x_src, fr.points, material)
        weights = rule.weights * telles_jac * fr.jacobians * 0.5 * (b - a)
        g_sub += _accumulate(u_vals, fr.shapes, weights)
    return g_sub


def strong_singular_integral(
    x_src,
    element,
    material: Material,
    order: int,
    xi_hat_src: float,
    kernels: KernelSet = DEFAULT_KERNELS,
):
    """Cauchy-singular element integral of T N J by singularity subtraction.

    The integrand is split as f(xi_hat) = F/(xi_hat - xi_hat') + remainder.
    The remainder is bounded and integrated with one Gauss panel per side of
    the singularity; the subtracted term integrates analytically.  For a
    singularity at an element end the one-sided principal value diverges
    logarithmically in the exclusion radius; the radius-dependent term is
    dropped here and cancels against the adjacent element's contribution for
    the shared (continuous) basis functions, leaving -+ln(2 J) as this
    element's finite part.
    """
    f0 = element.frames(np.array([float(xi_hat_src)]))
    jac0 = float(f0.jacobians[0])
    unit_tangent = f0.tangents[0] / jac0
    residue = kernels.traction_residue(unit_tangent, f0.normals[0], material)
    # F[i, l, j] = residue[i, j] * N_l(xi_hat')
    laurent = residue[:, None, :] * f0.shapes[0][None, :, None]

    rule = gauss_legendre(order)
    h_sub = np.zeros((2, element.n_shapes, 2))
    for a, b, _ in _split_panels(xi_hat_src):
        xi_hats = a + 0.5 * (rule.points + 1.0) * (b - a)
        fr = element.frames(xi_hats)
        t_vals = kernels.traction(x_src, fr.points, fr.normals, material)
        full = np.einsum("mij,ml,m->milj", t_vals, fr.shapes, fr.jacobians)
        sub = full - laurent[None] / (xi_hats - xi_hat_src)[:, None, None, None]
        h_sub += np.einsum("milj,m->ilj", sub, rule.weights) * 0.5 * (b - a)

    if -1.0 < xi_hat_src < 1.0:
        cpv = math.log((1.0 - xi_hat_src) / (1.0 + xi_hat_src))
    elif xi_hat_src >= 1.0:
        cpv = -math.log(2.0 * jac0)
    else:
        cpv = math.log(2.0 * jac0)
    h_sub += laurent * cpv
    return h_sub.reshape(2, -1)
