"""Rotation derivative of the fundamental eigenvalue via the boundary integral.

The derivative with respect to the rotation phase is the boundary integral of
minus the squared normal derivative times the normal speed of the rotation
field v(z) = iz over the obstacle boundary.  With the boundary parametrized
by the polar radius f, the normal-speed line element reduces to

    <eta, v> dsigma = f(psi) f'(psi) dpsi,   psi = phi - t,

with eta the outward normal of the punctured domain (pointing into the
obstacle).  Quadrature is 2-point Gauss per boundary edge on the exact curve;
edges never straddle the angular sectors because the boundary node count is a
multiple of 2n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PolygonVertexOnQuadraturePointError, UndefinedPointError
from .geometry import TWO_PI, DomainSpec, Family
from .mesh import INNER, TriMesh, triangulate
from . import fem

_GAUSS2 = np.array([-1.0, 1.0]) / math.sqrt(3.0)

# angular nudge applied to quadrature nodes that collide with polygon corners
_VERTEX_NUDGE = 1e-12


@dataclass(frozen=True)
class DerivativeSample:
    """Eigenvalue rotation derivative at one phase, with its sector split.

    `per_sector[k]` integrates over the obstacle-boundary piece in the k-th
    angular sector (delimited by consecutive symmetry axes, rotating with the
    obstacle); the sector values sum to the total exactly because they bin
    whole quadrature intervals.
    """

    t: float
    lambda1_prime: float
    per_sector: np.ndarray
    fd_estimate: Optional[float] = None

    def __post_init__(self):
        self.per_sector.setflags(write=False)


def hadamard_derivative(
    domain: DomainSpec,
    t: float,
    mesh: TriMesh,
    solution: fem.EigenSolution,
    flux: Optional[fem.BoundaryFlux] = None,
    matrices=None,
) -> DerivativeSample:
    """Boundary-integral derivative of the eigenvalue at rotation t."""
    if flux is None:
        flux = fem.boundary_flux(mesh, solution, INNER, matrices=matrices)
    obstacle = domain.obstacle
    n = obstacle.n
    t_red = mesh.t

    # consecutive node angles along the inner loop, unwrapped to an
    # increasing sequence
    ang = np.unwrap(flux.node_angles)
    ang = np.append(ang, ang[0] + TWO_PI)
    width = np.diff(ang)
    mid = 0.5 * (ang[:-1] + ang[1:])

    # 2-point Gauss in the angle on the exact curve
    g = mid[:, None] + 0.5 * width[:, None] * _GAUSS2[None, :]
    psi = g - t_red
    if obstacle.family is Family.POLYGON:
        psi = _nudge_off_corners(psi, n)
    f = obstacle.body_radius(psi)
    try:
        fp = obstacle.body_radius_prime(psi, nudge=_VERTEX_NUDGE)
    except UndefinedPointError as exc:
        raise PolygonVertexOnQuadraturePointError(str(exc)) from exc

    q2 = flux.edge_density**2
    edge_vals = -q2 * (0.5 * width) * (f * fp).sum(axis=1)

    sector = np.floor_divide(np.mod(mid - t_red, TWO_PI), math.pi / n).astype(int)
    sector = np.clip(sector, 0, 2 * n - 1)
    per_sector = np.zeros(2 * n)
    np.add.at(per_sector, sector, edge_vals)
    return DerivativeSample(
        t=t, lambda1_prime=float(edge_vals.sum()), per_sector=per_sector
    )


def _nudge_off_corners(psi: np.ndarray, n: int) -> np.ndarray:
    period = math.pi / n
    d = np.mod(psi, period)
    near_lo = d < _VERTEX_NUDGE
    near_hi = period - d < _VERTEX_NUDGE
    return psi + near_lo * _VERTEX_NUDGE - near_hi * _VERTEX_NUDGE


def finite_difference_derivative(
    domain: DomainSpec,
    t: float,
    delta: float = 1e-3,
    h: float = 0.02,
    seed: int = 0,
    tol: float = fem.DEFAULT_TOL,
) -> float:
    """Central finite difference of the eigenvalue, (lam(t+d) - lam(t-d))/2d.

    Both solves use the same target edge length and seed; the mesh morphs
    smoothly with the phase, so the difference is dominated by the true
    derivative rather than re-meshing noise.
    """
    lam = []
    for s in (t + delta, t - delta):
        m = triangulate(domain, s, h, seed=seed)
        K, M = fem.assemble(m)
        sol = fem.smallest_eigenpair(K, M, m.dirichlet_nodes(), tol=tol)
        lam.append(sol.lambda1)
    return (lam[0] - lam[1]) / (2.0 * delta)


@dataclass(frozen=True)
class PairingReport:
    """Sector integrals combined the way the monotonicity argument pairs them.

    For even n the 2n sectors pair into n consecutive couples whose summed
    contributions are all nonnegative for phases inside (0, pi/n).  For odd n
    one sector per hemisphere is left over; their couple carries the opposite
    sign, which is exactly the obstruction that downgrades the odd case to a
    conjecture.
    """

    n: int
    paired_sums: np.ndarray
    unpaired_term: Optional[float]
    total: float

    def __post_init__(self):
        self.paired_sums.setflags(write=False)


def sector_pairing_report(sample: DerivativeSample, n: int) -> PairingReport:
    s = sample.per_sector
    if s.shape[0] != 2 * n:
        raise ValueError(f"expected {2 * n} sector values, got {s.shape[0]}")
    if n % 2 == 0:
        pairs = np.array([s[2 * j] + s[2 * j + 1] for j in range(n)])
        return PairingReport(
            n=n, paired_sums=pairs, unpaired_term=None, total=float(s.sum())
        )
    upper = [s[k] + s[k + 1] for k in range(0, n - 2, 2)]
    lower = [s[k] + s[k + 1] for k in range(n, 2 * n - 2, 2)]
    pairs = np.array(upper + lower)
    unpaired = float(s[n - 1] + s[2 * n - 1])
    return PairingReport(
        n=n, paired_sums=pairs, unpaired_term=unpaired, total=float(s.sum())
    )
