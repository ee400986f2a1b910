"""NURBS curve kernel: basis functions, derivatives, refinement, element maps.

A curve is defined by a degree p, an open knot vector of length n + p + 1 and
n weighted control points in the plane.  The same rational basis carries the
geometry and, in the solver modules, the unknown boundary fields.

All routines are pure functions of immutable inputs; nothing here mutates its
arguments, so every function is safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DomainError, GeometryError, RefinementError

# Coincidence tolerance for closed-curve detection, relative to the bounding
# box diagonal of the control polygon.
CLOSURE_REL_TOL = 1e-9


def validate_knots(knots: np.ndarray, degree: int, n_basis: int) -> None:
    """Check the knot-vector invariants for an open (clamped) curve."""
    if degree < 1:
        raise GeometryError("degree must be at least 1")
    if knots.ndim != 1:
        raise GeometryError("knot vector must be one-dimensional")
    if len(knots) != n_basis + degree + 1:
        raise GeometryError(
            f"knot vector has {len(knots)} entries, expected n + p + 1 = "
            f"{n_basis + degree + 1}"
        )
    if np.any(np.diff(knots) < 0.0):
        raise GeometryError("knot vector must be non-decreasing")
    if not (
        np.all(knots[: degree + 1] == knots[0])
        and np.all(knots[-degree - 1 :] == knots[-1])
    ):
        raise GeometryError("knot vector must be open: p+1 repeated end knots")
    if not knots[degree] < knots[n_basis]:
        raise GeometryError("parametric domain is empty")
    interior = knots[degree + 1 : n_basis]
    if len(interior):
        _, counts = np.unique(interior, return_counts=True)
        if np.any(counts > degree + 1):
            raise GeometryError(
                "interior knot multiplicity above degree + 1 is not supported"
            )


def find_span(knots, degree: int, xi: float) -> int:
    """Return the knot span index i with knots[i] <= xi < knots[i+1].

    The parametric domain is treated as closed at the right end: xi equal to
    the final parameter is clamped into the last non-degenerate span, so the
    end point of the curve is still covered by a full set of basis functions.
    """
    knots = np.asarray(knots, dtype=float)
    n = len(knots) - degree - 1
    lo, hi = knots[degree], knots[n]
    tol = 1e-10 * max(abs(hi - lo), 1.0)
    if xi < lo - tol or xi > hi + tol:
        raise DomainError(f"parameter {xi!r} outside domain [{lo}, {hi}]")
    if xi >= hi:
        span = n - 1
        while knots[span] >= knots[span + 1]:
            span -= 1
        return span
    xi = max(xi, lo)
    return int(np.searchsorted(knots, xi, side="right")) - 1


def bspline_basis(knots, degree: int, xi: float, span: int | None = None) -> np.ndarray:
    """Evaluate the p+1 B-spline basis functions that are non-zero at xi.

    Returns the window N_{span-p}, ..., N_{span} computed with the Cox-de Boor
    recursion in its numerically stable triangular form.  Passing an explicit
    span pins the evaluation to that span, which yields one-sided limits at
    element junctions.
    """
    knots = np.asarray(knots, dtype=float)
    if span is None:
        span = find_span(knots, degree, xi)
    values = np.zeros(degree + 1)
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    values[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = xi - knots[span + 1 - j]
        right[j] = knots[span + j] - xi
        saved = 0.0
        for r in range(j):
            temp = values[r] / (right[r + 1] + left[j - r])
            values[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        values[j] = saved
    return values


def bspline_derivs(
    knots, degree: int, xi: float, order: int, span: int | None = None
) -> np.ndarray:
    """Basis values and derivatives up to `order` for the non-zero window.

    Returns an (order+1, p+1) table whose row k holds the k-th derivatives of
    N_{span-p}, ..., N_{span}.  Rows with k > p are identically zero.
    """
    knots = np.asarray(knots, dtype=float)
    p = degree
    if span is None:
        span = find_span(knots, p, xi)
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = xi - knots[span + 1 - j]
        right[j] = knots[span + j] - xi
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((order + 1, p + 1))
    ders[0, :] = ndu[:, p]
    kmax = min(order, p)
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, kmax + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    factor = float(p)
    for k in range(1, kmax + 1):
        ders[k, :] *= factor
        factor *= p - k
    return ders


def greville_abscissae(knots, degree: int) -> np.ndarray:
    """Greville parameters: the running p-averages of the interior knots.

    One value per basis function; for an open knot vector the first and last
    values coincide with the ends of the parametric domain.
    """
    knots = np.asarray(knots, dtype=float)
    n = len(knots) - degree - 1
    return np.array([knots[a + 1 : a + degree + 1].mean() for a in range(n)])


def element_ranges(knots) -> np.ndarray:
    """Parametric element boundaries: consecutive pairs of unique knot values."""
    uniq = np.unique(np.asarray(knots, dtype=float))
    return np.column_stack([uniq[:-1], uniq[1:]])


def build_connectivity(knots, degree: int, closed: bool = False) -> np.ndarray:
    """Map (element, local basis) to global basis index.

    Row e lists the p+1 global indices of the basis functions supported on
    span e, in ascending parameter order.  For a closed curve the final basis
    function is identified with the first, so its index wraps to 0.
    """
    knots = np.asarray(knots, dtype=float)
    n = len(knots) - degree - 1
    ranges = element_ranges(knots)
    conn = np.empty((len(ranges), degree + 1), dtype=int)
    for e, (start, end) in enumerate(ranges):
        span = find_span(knots, degree, 0.5 * (start + end))
        conn[e] = np.arange(span - degree, span + 1)
    if closed:
        conn[conn == n - 1] = 0
    return conn


@dataclass(frozen=True)
class ElementTable:
    """Per-element bookkeeping: parametric range, knot span and connectivity."""

    ranges: np.ndarray  # (n_el, 2)
    spans: np.ndarray  # (n_el,)
    conn: np.ndarray  # (n_el, p+1) global basis indices, closure wrap applied

    def __len__(self) -> int:
        return len(self.ranges)


@dataclass(frozen=True)
class NurbsCurve:
    """Rational curve: degree, open knot vector and weighted control points.

    `closed` is inferred from coincident first/last control points; it drives
    the connectivity wrap and the merging of the duplicated end basis
    function into a single degree of freedom downstream.
    """

    degree: int
    knots: np.ndarray
    points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,)
    closed: bool

    @classmethod
    def create(cls, degree, knots, points, weights=None) -> "NurbsCurve":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = len(points)
        knots = np.asarray(knots, dtype=float)
        if weights is None:
            weights = np.ones(n)
        weights = np.asarray(weights, dtype=float)
        validate_knots(knots, degree, n)
        if points.shape != (n, 2):
            raise GeometryError("control points must be an (n, 2) array")
        if weights.shape != (n,):
            raise GeometryError("need exactly one weight per control point")
        if np.any(weights <= 0.0):
            raise GeometryError("control point weights must be positive")
        diag = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
        gap = float(np.linalg.norm(points[0] - points[-1]))
        closed = gap <= CLOSURE_REL_TOL * max(diag, 1e-30)
        curve = cls(degree, knots, points, weights, closed)
        curve._check_junction_continuity(diag)
        return curve

    def _check_junction_continuity(self, diag: float) -> None:
        # A multiplicity p+1 interior knot splits the basis; the geometry
        # stays a curve only if the one-sided limits coincide there.
        values, counts = np.unique(
            self.knots[self.degree + 1 : self.n], return_counts=True
        )
        for value, count in zip(values, counts):
            if count < self.degree + 1:
                continue
            left_span = int(np.searchsorted(self.knots, value, side="left")) - 1
            right_span = find_span(self.knots, self.degree, float(value))
            left = bspline_basis(self.knots, self.degree, float(value), left_span)
            right = bspline_basis(self.knots, self.degree, float(value), right_span)
            p_left = (left * self.weights[left_span - self.degree : left_span + 1]) @ (
                self.points[left_span - self.degree : left_span + 1]
            ) / (left @ self.weights[left_span - self.degree : left_span + 1])
            p_right = (right * self.weights[right_span - self.degree : right_span + 1]) @ (
                self.points[right_span - self.degree : right_span + 1]
            ) / (right @ self.weights[right_span - self.degree : right_span + 1])
            if np.linalg.norm(p_left - p_right) > CLOSURE_REL_TOL * max(diag, 1e-30):
                raise GeometryError(
                    f"curve is discontinuous at knot {value!r}: the control "
                    f"points on either side of the full-multiplicity knot do "
                    f"not coincide"
                )

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[self.degree]), float(self.knots[self.n])

    def span_of(self, xi: float) -> int:
        return find_span(self.knots, self.degree, xi)

    def basis(self, xi: float, span: int | None = None) -> tuple[np.ndarray, int]:
        """Non-zero rational basis values at xi and the first global index."""
        if span is None:
            span = self.span_of(xi)
        nvals = bspline_basis(self.knots, self.degree, xi, span)
        first = span - self.degree
        weighted = nvals * self.weights[first : span + 1]
        return weighted / weighted.sum(), first

    def basis_derivs(
        self, xi: float, order: int, span: int | None = None
    ) -> tuple[np.ndarray, int]:
        """Rational basis derivatives 0..order for the non-zero window.

        Uses the lower-order recursion for derivatives of a quotient: the
        weighted numerator derivatives A^(k) and weight-sum derivatives W^(k)
        combine into d^k R via binomial downdating.
        """
        if span is None:
            span = self.span_of(xi)
        first = span - self.degree
        nd = bspline_derivs(self.knots, self.degree, xi, order, span)
        w = self.weights[first : span + 1]
        a_table = nd * w  # A^(k)_a = w_a d^k N_a
        w_table = a_table.sum(axis=1)  # W^(k)
        rational = np.zeros_like(a_table)
        for k in range(order + 1):
            acc = a_table[k].copy()
            for b in range(1, k + 1):
                acc -= comb(k, b) * w_table[b] * rational[k - b]
            rational[k] = acc / w_table[0]
        return rational, first

    def point(self, xi: float) -> np.ndarray:
        values, first = self.basis(xi)
        return values @ self.points[first : first + self.degree + 1]

    def derivatives(self, xi: float, order: int) -> np.ndarray:
        """Curve derivatives d^k C / d xi^k for k = 0..order, shape (order+1, 2)."""
        table, first = self.basis_derivs(xi, order)
        return table @ self.points[first : first + self.degree + 1]

    def homogeneous_points(self) -> np.ndarray:
        """Projective control points (w x, w y, w), shape (n, 3)."""
        return np.column_stack([self.points * self.weights[:, None], self.weights])

    def element_table(self) -> ElementTable:
        ranges = element_ranges(self.knots)
        spans = np.array(
            [self.span_of(0.5 * (s + f)) for s, f in ranges], dtype=int
        )
        conn = build_connectivity(self.knots, self.degree, self.closed)
        return ElementTable(ranges=ranges, spans=spans, conn=conn)

    def greville(self) -> np.ndarray:
        return greville_abscissae(self.knots, self.degree)


def insert_knot(curve: NurbsCurve, xi_new: float) -> NurbsCurve:
    """Insert one knot, preserving the curve exactly.

    The insertion acts on projective (w x, w y, w) coordinates so rational
    geometry is reproduced to rounding error.  The resulting multiplicity of
    xi_new must not exceed the degree.
    """
    lo, hi = curve.domain
    if not (lo < xi_new < hi):
        raise RefinementError(
            f"new knot {xi_new!r} must lie strictly inside the domain ({lo}, {hi})"
        )
    multiplicity = int(np.count_nonzero(curve.knots == xi_new))
    if multiplicity + 1 > curve.degree:
        raise RefinementError(
            f"inserting {xi_new!r} would raise its multiplicity to "
            f"{multiplicity + 1} > degree {curve.degree}"
        )
    p = curve.degree
    k = find_span(curve.knots, p, xi_new)
    hw = curve.homogeneous_points()
    new_hw = np.empty((curve.n + 1, 3))
    new_hw[: k - p + 1] = hw[: k - p + 1]
    for i in range(k - p + 1, k + 1):
        alpha = (xi_new - curve.knots[i]) / (curve.knots[i + p] - curve.knots[i])
        new_hw[i] = alpha * hw[i] + (1.0 - alpha) * hw[i - 1]
    new_hw[k + 1 :] = hw[k:]
    new_knots = np.insert(curve.knots, k + 1, xi_new)
    w = new_hw[:, 2]
    return NurbsCurve.create(p, new_knots, new_hw[:, :2] / w[:, None], w)


def elevate_order(curve: NurbsCurve) -> NurbsCurve:
    """Raise the degree by one, preserving the curve exactly.

    The elevated curve lives on the knot vector with every distinct knot's
    multiplicity increased by one.  Its control points are recovered by
    collocating the projective curve at the Greville abscissae of the new
    space; the collocation matrix satisfies the Schoenberg-Whitney condition,
    so the fit reproduces the geometry to solver precision.
    """
    p = curve.degree
    uniq, counts = np.unique(curve.knots, return_counts=True)
    new_knots = np.repeat(uniq, counts + 1)
    new_p = p + 1
    n_new = len(new_knots) - new_p - 1
    grev = greville_abscissae(new_knots, new_p)
    collocation = np.zeros((n_new, n_new))
    rhs = np.zeros((n_new, 3))
    hw = curve.homogeneous_points()
    for row, g in enumerate(grev):
        # Duplicated Greville values occur at full-multiplicity junctions;
        # the first of the pair takes the left-hand limit, the second the
        # right-hand one, keeping the collocation system non-singular.
        pin_left = row + 1 < n_new and g == grev[row + 1]
        if pin_left:
            span = int(np.searchsorted(new_knots, g, side="left")) - 1
            old_span = int(np.searchsorted(curve.knots, g, side="left")) - 1
        else:
            span = find_span(new_knots, new_p, g)
            old_span = find_span(curve.knots, p, g)
        collocation[row, span - new_p : span + 1] = bspline_basis(
            new_knots, new_p, g, span
        )
        nvals = bspline_basis(curve.knots, p, g, old_span)
        rhs[row] = nvals @ hw[old_span - p : old_span + 1]
    elevated = np.linalg.solve(collocation, rhs)
    w = elevated[:, 2]
    if np.any(w <= 0.0):
        raise RefinementError("order elevation produced non-positive weights")
    return NurbsCurve.create(new_p, new_knots, elevated[:, :2] / w[:, None], w)


@dataclass(frozen=True)
class ElementFrames:
    """Geometry and basis data sampled at parent coordinates of one element."""

    points: np.ndarray  # (m, 2) physical positions
    tangents: np.ndarray  # (m, 2) dx/dxi_hat
    normals: np.ndarray  # (m, 2) unit outward normals (CCW parameterisation)
    jacobians: np.ndarray  # (m,) |dx/dxi_hat| = dGamma/dxi * dxi/dxi_hat
    shapes: np.ndarray  # (m, n_shapes) basis values


@dataclass(frozen=True)
class CurveElement:
    """Integration view of one knot span, pinned to its own span.

    Evaluation at the parent ends yields the one-sided limits of the basis
    and tangent, which is what the singular integrators and corner handling
    need at C0 junctions.
    """

    curve: NurbsCurve
    index: int
    xi_start: float
    xi_end: float
    span: int
    dofs: np.ndarray  # global column indices for the p+1 local functions

    @property
    def n_shapes(self) -> int:
        return self.curve.degree + 1

    def param_of(self, xi_hat: float) -> float:
        return self.xi_start + 0.5 * (xi_hat + 1.0) * (self.xi_end - self.xi_start)

    @property
    def parent_jacobian(self) -> float:
        """d xi / d xi_hat for this span."""
        return 0.5 * (self.xi_end - self.xi_start)

    def frames(self, xi_hats) -> ElementFrames:
        xi_hats = np.atleast_1d(np.asarray(xi_hats, dtype=float))
        m = len(xi_hats)
        p = self.curve.degree
        first = self.span - p
        ctrl = self.curve.points[first : first + p + 1]
        points = np.empty((m, 2))
        tangents = np.empty((m, 2))
        shapes = np.empty((m, p + 1))
        dxi = self.parent_jacobian
        for i, xh in enumerate(xi_hats):
            xi = self.param_of(xh)
            table, _ = self.curve.basis_derivs(xi, 1, span=self.span)
            shapes[i] = table[0]
            points[i] = table[0] @ ctrl
            tangents[i] = (table[1] @ ctrl) * dxi
        jac = np.linalg.norm(tangents, axis=1)
        scale = max(np.abs(ctrl).max(), 1.0)
        if np.any(jac <= 1e-14 * scale):
            raise GeometryError(
                f"degenerate element {self.index}: zero tangent encountered"
            )
        normals = np.column_stack([tangents[:, 1], -tangents[:, 0]]) / jac[:, None]
        return ElementFrames(points, tangents, normals, jac, shapes)


def curve_elements(curve: NurbsCurve, table: ElementTable, dof_of) -> list[CurveElement]:
    """Build integration views for every element of `curve`.

    `dof_of` maps a global basis index to its degree-of-freedom column,
    folding the duplicated closure basis onto the first one.
    """
    views = []
    for e in range(len(table)):
        start, end = table.ranges[e]
        dofs = np.array([dof_of(a) for a in table.conn[e]], dtype=int)
        views.append(
            CurveElement(
                curve=curve,
                index=e,
                xi_start=float(start),
                xi_end=float(end),
                span=int(table.spans[e]),
                dofs=dofs,
            )
        )
    return views
