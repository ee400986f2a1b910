"""Exception types shared across the solver stack."""


class IgabemError(Exception):
    """Base class for every error raised by this package."""


class DomainError(IgabemError, ValueError):
    """A parameter lies outside the parametric domain of a curve."""


class GeometryError(IgabemError):
    """Degenerate or inconsistent geometry (zero tangent, bad knot vector, ...)."""


class RefinementError(IgabemError):
    """Invalid refinement request, e.g. knot multiplicity overflow."""


class ConfigError(IgabemError):
    """Unsupported quadrature or solver configuration."""


class SingularityError(IgabemError):
    """A kernel was evaluated at (numerically) zero distance.

    Raised from the regular integration path; it signals that a collocation
    point / element pair was misclassified and should have gone through the
    singular routines.
    """


class ModelError(IgabemError):
    """Ill-posed boundary value problem (BC coverage, orientation, ...)."""


class ValidationError(ModelError):
    """A model file failed schema or invariant validation."""


class SolverError(IgabemError):
    """The dense solve failed or produced an unacceptable residual."""
