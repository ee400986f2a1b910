"""Fundamental solutions, corner free terms and surface frames."""

import math

import numpy as np
import pytest

from igabem import (
    GeometryError,
    Material,
    ModelError,
    NurbsCurve,
    SingularityError,
    gauss_legendre,
    jump_term,
    kelvin_t,
    kelvin_u,
    surface_frame,
    wedge_angles,
)
from igabem.nurbs import curve_elements
from igabem.quadrature import strong_singular_integral
from conftest import ARC_CENTRE, VESSEL_PERIMETER


MU, NU = 1.0, 0.3
MAT = Material(shear_modulus=MU, poisson=NU)


class TestMaterial:
    def test_effective_poisson(self):
        assert Material(1.0, 0.3, "plane-strain").nu_bar == 0.3
        assert Material(1.0, 0.3, "plane-stress").nu_bar == pytest.approx(0.3 / 1.3)

    def test_invalid_values_rejected(self):
        with pytest.raises(ModelError):
            Material(-1.0, 0.3)
        with pytest.raises(ModelError):
            Material(1.0, 0.6)
        with pytest.raises(ModelError):
            Material(1.0, 0.3, "axisymmetric")

    def test_from_youngs(self):
        mat = Material.from_youngs(2.6, 0.3)
        assert mat.shear_modulus == pytest.approx(1.0)


class TestKelvinU:
    def test_axis_aligned_offdiagonal_vanishes(self):
        u = kelvin_u((0, 0), (2.5, 0), MAT)
        assert u[0, 1] == 0.0 and u[1, 0] == 0.0

    def test_unit_distance_value(self):
        # r = 1 kills the log term, leaving the dyadic part.
        u = kelvin_u((0, 0), (1, 0), MAT)
        c = 1.0 / (8 * math.pi * MU * (1 - NU))
        assert u[0, 0] == pytest.approx(c)
        assert u[1, 1] == pytest.approx(0.0, abs=1e-16)

    def test_symmetric_in_indices_and_under_swap(self):
        a, b = np.array([0.3, -0.2]), np.array([1.7, 0.9])
        u_ab = kelvin_u(a, b, MAT)
        u_ba = kelvin_u(b, a, MAT)
        assert u_ab[0, 1] == u_ab[1, 0]
        assert u_ab == pytest.approx(u_ba)

    def test_log_growth(self):
        # U(r/2) - U(r) = c (3-4nu) ln 2 on the diagonal, along a fixed ray.
        direction = np.array([1.0, 0.0])
        diff = kelvin_u((0, 0), 0.5 * direction, MAT) - kelvin_u((0, 0), direction, MAT)
        c = (3 - 4 * NU) * math.log(2.0) / (8 * math.pi * MU * (1 - NU))
        assert diff[0, 0] == pytest.approx(c)
        assert diff[1, 1] == pytest.approx(c)

    def test_zero_distance_raises(self):
        with pytest.raises(SingularityError):
            kelvin_u((1, 1), (1, 1), MAT)


class TestKelvinT:
    def test_orthogonal_normal_leaves_antisymmetric_part(self):
        t = kelvin_t((0, 0), (2, 0), (0, 1), MAT)
        # dr/dn = 0: diagonal vanishes, off-diagonal is the rotation part.
        c = (1 - 2 * NU) / (4 * math.pi * (1 - NU) * 2.0)
        assert t[0, 0] == pytest.approx(0.0, abs=1e-16)
        assert t[1, 1] == pytest.approx(0.0, abs=1e-16)
        assert t[0, 1] == pytest.approx(c)
        assert t[1, 0] == pytest.approx(-c)

    def test_linear_in_normal(self):
        n = np.array([0.6, 0.8])
        t_plus = kelvin_t((0, 0), (1.2, 0.4), n, MAT)
        t_minus = kelvin_t((0, 0), (1.2, 0.4), -n, MAT)
        assert t_plus == pytest.approx(-t_minus)

    def test_inverse_distance_homogeneity(self):
        ray = np.array([0.8, 0.6])
        n = np.array([0.0, 1.0])
        t_r = kelvin_t((0, 0), ray, n, MAT)
        t_2r = kelvin_t((0, 0), 2 * ray, n, MAT)
        assert t_2r == pytest.approx(0.5 * t_r)


class TestJumpTerm:
    def test_smooth_point_is_half_identity(self):
        for angle in (0.0, 0.7, 2.5, -1.2):
            tangent = np.array([math.cos(angle), math.sin(angle)])
            theta1, theta2 = wedge_angles(tangent, tangent)
            assert theta1 - theta2 == pytest.approx(math.pi)
            free = jump_term(theta1, theta2, MAT)
            assert np.abs(free - 0.5 * np.eye(2)).max() < 1e-14

    def test_plane_stress_zero_poisson_equals_plane_strain(self):
        strain = Material(1.0, 0.0, "plane-strain")
        stress = Material(1.0, 0.0, "plane-stress")
        t1, t2 = wedge_angles((1, 0), (0, 1))
        assert jump_term(t1, t2, strain) == pytest.approx(jump_term(t1, t2, stress))

    def test_corner_against_rigid_body_oracle(self, square_curve, square_model):
        """C at a square corner must equal minus the closed-contour T integral.

        Flux equilibrium of the point-load traction field makes the sum of
        all (principal value) element integrals of T around the closed
        square, collocated at the corner (0,0), the negative of the free
        term.  This pins the angle convention jointly with the singular
        quadrature.
        """
        curve = square_curve
        table = curve.element_table()
        views = curve_elements(curve, table, lambda a: a)
        x_corner = np.array([0.0, 0.0])
        total = np.zeros((2, 2))
        from igabem.quadrature import regular_element_integral

        for e, view in enumerate(views):
            if e == 0:
                h_sub = strong_singular_integral(x_corner, view, MAT, 16, -1.0)
            elif e == 3:
                h_sub = strong_singular_integral(x_corner, view, MAT, 16, +1.0)
            else:
                h_sub = regular_element_integral(x_corner, view, MAT, 24)[0]
            # sum over the local basis (partition of unity) -> integral of T
            block = h_sub.reshape(2, view.n_shapes, 2)
            total += block.sum(axis=1)
        t_in = np.array([0.0, -1.0])  # incoming along the left edge, downward
        t_out = np.array([1.0, 0.0])  # outgoing along the bottom edge
        free = jump_term(*wedge_angles(t_in, t_out), MAT)
        assert np.abs(free + total).max() < 1e-8
        # right-angle corner: diagonal entries are 1/4
        assert free[0, 0] == pytest.approx(0.25)
        assert free[1, 1] == pytest.approx(0.25)


class TestSurfaceFrame:
    def test_straight_horizontal_segment(self):
        curve = NurbsCurve.create(
            2, [0, 0, 0, 1, 1, 1], [(0, 0), (1, 0), (2, 0)]
        )
        frame = surface_frame(curve, (0.0, 1.0), 0.3)
        assert frame.normal == pytest.approx([0.0, -1.0])
        assert frame.jacobian_param == pytest.approx(2.0)
        assert frame.jacobian_parent == pytest.approx(0.5)

    def test_vessel_arc_normals_are_radial(self, vessel_curve):
        for xi_hat in np.linspace(-1, 1, 9):
            frame = surface_frame(vessel_curve, (1.0, 2.0), xi_hat)
            radial = (ARC_CENTRE - frame.point) / np.linalg.norm(
                ARC_CENTRE - frame.point
            )
            assert np.linalg.norm(frame.normal - radial) < 1e-9

    def test_parent_jacobian_of_unit_range(self, vessel_curve):
        frame = surface_frame(vessel_curve, (1.0, 2.0), 0.0)
        assert frame.jacobian_parent == pytest.approx(0.5)

    def test_normals_unit_length(self, vessel_curve):
        for xi_hat in np.linspace(-1, 1, 7):
            for rng in ((0.0, 1.0), (4.0, 5.0), (10.0, 11.0)):
                frame = surface_frame(vessel_curve, rng, xi_hat)
                assert abs(np.linalg.norm(frame.normal) - 1.0) < 1e-14

    def test_degenerate_element_rejected(self):
        # Coincident control points collapse the tangent at the start.
        curve = NurbsCurve.create(
            2, [0, 0, 0, 1, 1, 1], [(0, 0), (0, 0), (2, 0)]
        )
        with pytest.raises(GeometryError, match="tangent"):
            surface_frame(curve, (0.0, 1.0), -1.0)


class TestArcLength:
    def test_vessel_perimeter(self, vessel_curve):
        """Straight-run lengths plus the quarter circle, via the frames."""
        table = vessel_curve.element_table()
        views = curve_elements(vessel_curve, table, lambda a: a)
        rule = gauss_legendre(16)
        perimeter = sum(
            float(view.frames(rule.points).jacobians @ rule.weights)
            for view in views
        )
        assert abs(perimeter - VESSEL_PERIMETER) < 1e-8
