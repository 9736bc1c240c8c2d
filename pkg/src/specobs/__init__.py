"""Eigenvalue optimization of a rotating dihedral obstacle inside a disk."""

from .errors import (
    AmbiguousExtremumError,
    ConfigError,
    DegenerateElementError,
    InvalidDomainError,
    MarkerMissingError,
    MeshFailure,
    NoConvergenceError,
    PolygonVertexOnQuadraturePointError,
    SingularFactorizationError,
    SpecobsError,
    UnconvergedSolutionError,
    UndefinedPointError,
)
from .geometry import DiskSpec, DomainSpec, Family, ObstacleSpec, Position

__version__ = "0.1.0"

__all__ = [
    "DiskSpec",
    "DomainSpec",
    "Family",
    "ObstacleSpec",
    "Position",
    "SpecobsError",
    "InvalidDomainError",
    "UndefinedPointError",
    "MeshFailure",
    "DegenerateElementError",
    "MarkerMissingError",
    "NoConvergenceError",
    "SingularFactorizationError",
    "UnconvergedSolutionError",
    "PolygonVertexOnQuadraturePointError",
    "AmbiguousExtremumError",
    "ConfigError",
    "__version__",
]
