"""Shared fixtures: the bundled models and a few hand-built geometries."""

import math

import numpy as np
import pytest

from igabem import (
    BemModel,
    BoundaryCondition,
    Material,
    NurbsCurve,
    conventional_solve,
    load_bundled,
    solve_model,
)

# Exact perimeter of the vessel section: ten straight runs plus the quarter
# circle of radius 60 (lengths read off the control net, which the straight
# segments interpolate).
VESSEL_STRAIGHT_LENGTH = 40 + 40 + 55 + 25 + 20 + 35 + 15 + 25 + 10 + 15
VESSEL_ARC_LENGTH = 2 * math.pi * 60 / 4
VESSEL_PERIMETER = VESSEL_STRAIGHT_LENGTH + VESSEL_ARC_LENGTH
ARC_CENTRE = np.array([100.0, 0.0])
ARC_RADIUS = 60.0


@pytest.fixture(scope="session")
def vessel():
    model, settings = load_bundled("pressure_vessel")
    return model


@pytest.fixture(scope="session")
def vessel_curve(vessel):
    return vessel.curve


@pytest.fixture(scope="session")
def annulus():
    model, settings = load_bundled("annulus_quadrant")
    return model


@pytest.fixture(scope="session")
def unit_material():
    return Material(shear_modulus=1.0, poisson=0.3)


@pytest.fixture(scope="session")
def square_curve():
    """Unit square, counter-clockwise, one quadratic span per edge."""
    pts = [(0, 0), (0.5, 0), (1, 0), (1, 0.5), (1, 1), (0.5, 1), (0, 1), (0, 0.5), (0, 0)]
    knots = [0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 4]
    return NurbsCurve.create(2, knots, pts)


@pytest.fixture(scope="session")
def square_model(square_curve, unit_material):
    bcs = [
        BoundaryCondition((0.0, 4.0), "traction", "x", 0.0),
        BoundaryCondition((0.0, 4.0), "traction", "y", 0.0),
    ]
    return BemModel.create(square_curve, unit_material, bcs)


@pytest.fixture(scope="session")
def circle_curve():
    """Unit circle traced counter-clockwise by four exact rational arcs."""
    s = math.sqrt(2) / 2
    pts = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0)]
    w = [1, s, 1, s, 1, s, 1, s, 1]
    knots = [0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 4]
    return NurbsCurve.create(2, knots, pts, w)


@pytest.fixture(scope="session")
def vessel_report(vessel):
    """Base-mesh solve of the vessel problem, shared across tests."""
    return solve_model(vessel)


@pytest.fixture(scope="session")
def annulus_report(annulus):
    return solve_model(annulus)


@pytest.fixture(scope="session")
def vessel_lagrange_report(vessel):
    return conventional_solve(vessel, 1)


def annulus_exact_radial(model, r):
    """Analytic radial displacement of the pressurised thick ring."""
    ref = model.analytic_reference
    a, b, p = ref["inner_radius"], ref["outer_radius"], ref["pressure"]
    mu = model.material.shear_modulus
    nu = model.material.poisson
    return p * a * a / (2 * mu * (b * b - a * a)) * ((1 - 2 * nu) * r + b * b / r)
