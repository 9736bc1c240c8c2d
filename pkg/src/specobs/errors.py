"""Exception types shared across the package."""


class SpecobsError(Exception):
    """Base class for all package errors."""


class InvalidDomainError(SpecobsError):
    """Geometry violates an admissibility condition (e.g. free rotation)."""


class UndefinedPointError(SpecobsError):
    """A boundary quantity was requested at a point where it does not exist
    (polygon corner)."""


class MeshFailure(SpecobsError):
    """Mesh generation cannot proceed (gap too thin for the requested h)."""


class DegenerateElementError(SpecobsError):
    """A triangle with non-positive area was found during assembly."""


class MarkerMissingError(SpecobsError):
    """Element region markers are required but absent."""


class NoConvergenceError(SpecobsError):
    """Eigenvalue iteration did not converge within the iteration budget."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )


class SingularFactorizationError(SpecobsError):
    """Sparse factorization of the (shifted) operator failed."""


class UnconvergedSolutionError(SpecobsError):
    """A downstream operation received an eigensolution whose residual is too
    large to trust."""


class PolygonVertexOnQuadraturePointError(SpecobsError):
    """A boundary quadrature node landed exactly on a polygon corner and could
    not be shifted off it."""


class AmbiguousExtremumError(SpecobsError):
    """Sweep variation is below the noise floor; extrema cannot be located."""


class ConfigError(SpecobsError):
    """Run configuration failed validation."""
