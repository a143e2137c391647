"""Exception hierarchy shared by all flatstrata modules.

Errors split into three families: structural errors raised while building
or validating a surface, geometric errors raised by tracing and chart
machinery, and estimator configuration errors.  CLI maps the geometric
family to exit code 2 and I/O problems to exit code 1.
"""


class FlatStrataError(Exception):
    """Base class for all library errors."""


# -- surface construction ---------------------------------------------------

class BadGluing(FlatStrataError):
    """Combinatorial gluing is not a closed connected oriented surface."""


class EquationViolation(FlatStrataError):
    """A triangle's signed edge vectors do not sum to zero within tolerance."""

    def __init__(self, triangle: int, residual: float, tol: float):
        self.triangle = triangle
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"triangle {triangle}: closure residual {residual:.3e} exceeds {tol:.3e}"
        )


class DegenerateTriangle(FlatStrataError):
    """A triangle has zero or negative signed area."""

    def __init__(self, triangle: int, area: float):
        self.triangle = triangle
        self.area = area
        super().__init__(f"triangle {triangle}: signed area {area:.3e} is not positive")


class SingularMatrix(FlatStrataError):
    """Transformation matrix has non-positive determinant."""


# -- geodesics and charts ---------------------------------------------------

class RayThroughVertexAmbiguity(FlatStrataError):
    """A developed ray passes through a triangulation vertex (within tolerance).

    Sampling callers treat this as a measure-zero rejection.
    """


# alias used by genericity checks, which propagate tracing ambiguities
AmbiguousRay = RayThroughVertexAmbiguity


class NotOnSurface(FlatStrataError):
    """A crossing record is inconsistent with the surface's gluing."""


class NotGeneric(FlatStrataError):
    """Surface violates the genericity conditions required by the construction."""


class DomainViolation(FlatStrataError):
    """A chart-domain inequality fails for the supplied coordinates."""


class MarkedDependent(FlatStrataError):
    """The marked edges are not independent with respect to the system."""


class IsAbelianSquare(FlatStrataError):
    """Sign holonomy is trivial: the form is globally a square of a 1-form."""


class NotPeriodic(FlatStrataError):
    """A separatrix failed to close into a saddle connection within budget."""


class BadDiscriminant(FlatStrataError):
    """Discriminant is not a positive integer congruent to 0 or 1 mod 4."""


# -- estimators --------------------------------------------------------------

class DimensionMismatch(FlatStrataError):
    """Marked family size and epsilon vector size disagree."""


class NonPositiveEstimate(FlatStrataError):
    """Log-log regression requires strictly positive estimates."""


class InsufficientGrid(FlatStrataError):
    """Scaling regression needs at least three grid points."""


class EmptyChart(FlatStrataError):
    """No valid surface was found in the warmup draws of a chart box."""
