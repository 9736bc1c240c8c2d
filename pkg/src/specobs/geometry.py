"""Admissible geometry: dihedral obstacles, the off-center disk, normal fields.

The obstacle P is star-shaped about the origin with a 2*pi/n-dihedral symmetry
and is described by a polar radius f(phi).  The surrounding disk B has center
(-x0, 0) and radius r1 and is described, about the obstacle center, by the
polar radius g(phi).  All angles are radians; the rotation phase t moves the
obstacle anticlockwise, so the boundary of the rotated obstacle is
f(phi - t) e^{i phi}.

Phase convention: at t = 0 every family is stored in its inner-vertex-on-the-
negative-x-axis form (the minimizing start position), so classification by the
reduced phase t mod 2*pi/n is exact arithmetic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidDomainError, UndefinedPointError

TWO_PI = 2.0 * math.pi

# Angular tolerance for vertex-on-axis classification; absorbs floating-point
# modulo error only, the classification itself is exact arithmetic on t.
CLASSIFY_TOL = 1e-9

_CORNER_TOL = 1e-12


def wrap_angle(phi: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    out = math.fmod(phi, TWO_PI)
    return out + TWO_PI if out < 0.0 else out


class Family(enum.Enum):
    GEAR = "gear"
    ROUNDED_POLYGON = "rounded_polygon"
    POLYGON = "polygon"


class Position(enum.Enum):
    """Configuration of the obstacle relative to the disk."""

    ON = "ON"
    OFF = "OFF"
    INTERMEDIATE = "intermediate"


@dataclass(frozen=True)
class RadialCurve:
    """A closed boundary given by a polar radius and its derivative.

    `value(phi)` and `derivative(phi)` accept scalars or arrays.  Adapter used
    by the normal-field operations so they work for obstacles, disks and raw
    test functions alike.
    """

    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ObstacleSpec:
    """Dihedral star-shaped obstacle centered at the origin.

    Parameters
    ----------
    n : symmetry order, >= 3.
    family : boundary family (gear, rounded polygon, polygon).
    base_radius : r0; for polygon families this is the circumradius.
    amplitude : gear modulation depth, 0 <= amplitude < 1.
    corner_radius : rounding radius, rounded-polygon family only.
    phase : current rotation t (radians).
    asymmetry : optional dihedral-symmetry-breaking perturbation amplitude,
        relative to base_radius.  Nonzero values void every symmetry guarantee
        and exist solely for negative-control experiments.
    """

    n: int
    family: Family
    base_radius: float
    amplitude: float = 0.0
    corner_radius: float = 0.0
    phase: float = 0.0
    asymmetry: float = 0.0

    def __post_init__(self):
        if self.n < 3:
            raise InvalidDomainError(f"symmetry order must be >= 3, got {self.n}")
        if self.base_radius <= 0.0:
            raise InvalidDomainError("base_radius must be positive")
        if self.family is Family.GEAR:
            if not 0.0 <= self.amplitude < 1.0:
                raise InvalidDomainError(
                    f"gear amplitude must lie in [0, 1), got {self.amplitude}"
                )
        elif self.family is Family.ROUNDED_POLYGON:
            if not 0.0 < self.corner_radius < self.base_radius:
                raise InvalidDomainError(
                    "corner_radius must lie in (0, base_radius) for rounded polygons"
                )
        if abs(self.asymmetry) >= 0.5:
            raise InvalidDomainError("asymmetry perturbation too large")

    # -- body-frame boundary (phase not applied) --------------------------

    def body_radius(self, psi):
        """Polar radius f(psi) of the unrotated obstacle."""
        psi = np.asarray(psi, dtype=float)
        if self.family is Family.GEAR:
            # n even stores the phase-shifted gear so the minimum sits at psi=0.
            sign = -1.0 if self.n % 2 == 0 else 1.0
            out = self.base_radius * (1.0 + sign * self.amplitude * np.cos(self.n * psi))
        elif self.family is Family.POLYGON:
            e = self._midpoint_offset(psi)
            out = self._apothem() / np.cos(e)
        else:
            out = self._rounded_radius(psi)
        if self.asymmetry:
            out = out + self.base_radius * self.asymmetry * np.sin(psi)
        return out if out.ndim else float(out)

    def body_radius_prime(self, psi, nudge: float = 0.0):
        """df/dpsi for the unrotated obstacle.

        With `nudge > 0`, evaluation points within the corner tolerance of a
        polygon corner are shifted by `nudge` instead of raising; scalar calls
        with nudge=0 raise UndefinedPointError at corners.
        """
        scalar = np.isscalar(psi) or np.ndim(psi) == 0
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        if self.family is Family.GEAR:
            sign = -1.0 if self.n % 2 == 0 else 1.0
            out = (
                -sign
                * self.base_radius
                * self.amplitude
                * self.n
                * np.sin(self.n * psi)
            )
        elif self.family is Family.POLYGON:
            e = self._midpoint_offset(psi)
            at_corner = np.abs(np.abs(e) - math.pi / self.n) < _CORNER_TOL
            if np.any(at_corner):
                if nudge <= 0.0:
                    raise UndefinedPointError(
                        "polygon boundary derivative undefined at a corner"
                    )
                e = np.where(at_corner, e - np.sign(e) * nudge, e)
            a = self._apothem()
            out = a * np.sin(e) / np.cos(e) ** 2
        else:
            out = self._rounded_radius_prime(psi)
        if self.asymmetry:
            out = out + self.base_radius * self.asymmetry * np.cos(psi)
        return float(out[0]) if scalar else out

    # -- polygon helpers ---------------------------------------------------

    def _apothem(self) -> float:
        return self.base_radius * math.cos(math.pi / self.n)

    def _midpoint_offset(self, psi):
        """Signed angular distance to the nearest inner-vertex direction.

        Inner vertices (edge midpoints) sit at pi + 2*pi*k/n, so the offset is
        in (-pi/n, pi/n] with |offset| = pi/n exactly at a corner.
        """
        period = TWO_PI / self.n
        d = np.mod(psi - math.pi, period)
        return np.where(d > period / 2.0, d - period, d)

    def _rounded_corner_geometry(self):
        rq = self.base_radius - self.corner_radius
        a_flat = rq * math.cos(math.pi / self.n) + self.corner_radius
        # angular half-width of the flat part, measured from an edge midpoint
        e_star = math.atan2(rq * math.sin(math.pi / self.n), a_flat)
        return rq, a_flat, e_star

    def _rounded_radius(self, psi):
        rq, a_flat, e_star = self._rounded_corner_geometry()
        e = self._midpoint_offset(psi)
        beta = math.pi / self.n - np.abs(e)
        # radicand is only meaningful on the arc branch; clamp the rest
        rad = np.maximum(self.corner_radius**2 - (rq * np.sin(beta)) ** 2, 0.0)
        arc = rq * np.cos(beta) + np.sqrt(rad)
        return np.where(np.abs(e) <= e_star, a_flat / np.cos(e), arc)

    def _rounded_radius_prime(self, psi):
        rq, a_flat, e_star = self._rounded_corner_geometry()
        e = self._midpoint_offset(psi)
        beta = math.pi / self.n - np.abs(e)
        root = np.sqrt(
            np.maximum(self.corner_radius**2 - (rq * np.sin(beta)) ** 2, 1e-300)
        )
        arc = np.sign(e) * rq * np.sin(beta) * (1.0 + rq * np.cos(beta) / root)
        flat = a_flat * np.sin(e) / np.cos(e) ** 2
        return np.where(np.abs(e) <= e_star, flat, arc)

    # -- world-frame boundary (phase applied) ------------------------------

    def radius(self, phi):
        """Polar radius of the rotated boundary, f(phi - t)."""
        return self.body_radius(np.asarray(phi, dtype=float) - self.phase)

    def radius_prime(self, phi, nudge: float = 0.0):
        return self.body_radius_prime(
            np.asarray(phi, dtype=float) - self.phase, nudge=nudge
        )

    def boundary_curve(self) -> RadialCurve:
        return RadialCurve(self.radius, self.radius_prime)

    # -- derived quantities --------------------------------------------------

    @property
    def inradius(self) -> float:
        return self._radial_extrema()[0]

    @property
    def circumradius(self) -> float:
        return self._radial_extrema()[1]

    def _radial_extrema(self):
        if self.asymmetry:
            psi = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
            r = self.body_radius(psi)
            return float(r.min()), float(r.max())
        if self.family is Family.GEAR:
            return (
                self.base_radius * (1.0 - self.amplitude),
                self.base_radius * (1.0 + self.amplitude),
            )
        if self.family is Family.POLYGON:
            return self._apothem(), self.base_radius
        rq, a_flat, _ = self._rounded_corner_geometry()
        return a_flat, rq + self.corner_radius

    def inner_vertex_angles(self) -> np.ndarray:
        """World-frame directions of the inner vertices (incircle contacts)."""
        k = np.arange(self.n)
        return np.mod(self.phase + math.pi + k * TWO_PI / self.n, TWO_PI)

    def outer_vertex_angles(self) -> np.ndarray:
        """World-frame directions of the outer vertices (circumcircle contacts)."""
        k = np.arange(self.n)
        return np.mod(
            self.phase + math.pi + math.pi / self.n + k * TWO_PI / self.n, TWO_PI
        )

    def area(self) -> float:
        """Enclosed area by boundary quadrature, 0.5 * integral of f^2."""
        psi = np.linspace(0.0, TWO_PI, 8192, endpoint=False)
        r = self.body_radius(psi)
        return float(0.5 * np.mean(r * r) * TWO_PI)

    def rotated(self, t: float) -> "ObstacleSpec":
        """Copy of this obstacle with phase t."""
        return ObstacleSpec(
            n=self.n,
            family=self.family,
            base_radius=self.base_radius,
            amplitude=self.amplitude,
            corner_radius=self.corner_radius,
            phase=t,
            asymmetry=self.asymmetry,
        )


@dataclass(frozen=True)
class DiskSpec:
    """Open disk of radius r1 centered at (-x0, 0), 0 <= x0 < r1."""

    x0: float
    r1: float

    def __post_init__(self):
        if not 0.0 <= self.x0 < self.r1:
            raise InvalidDomainError(
                f"need 0 <= x0 < r1, got x0={self.x0}, r1={self.r1}"
            )

    @property
    def is_concentric(self) -> bool:
        """Degenerate x0 = 0 case: the disk is centered at the obstacle center."""
        return self.x0 == 0.0

    @property
    def center(self) -> np.ndarray:
        return np.array([-self.x0, 0.0])

    def radius(self, phi):
        """Polar radius g(phi) about the origin.

        Closed form from (g cos phi + x0)^2 + (g sin phi)^2 = r1^2.
        """
        phi = np.asarray(phi, dtype=float)
        s = np.sin(phi)
        out = -self.x0 * np.cos(phi) + np.sqrt(self.r1**2 - (self.x0 * s) ** 2)
        return out if out.ndim else float(out)

    def radius_prime(self, phi, nudge: float = 0.0):
        phi = np.asarray(phi, dtype=float)
        s, c = np.sin(phi), np.cos(phi)
        root = np.sqrt(self.r1**2 - (self.x0 * s) ** 2)
        out = self.x0 * s - self.x0**2 * s * c / root
        return out if out.ndim else float(out)

    def boundary_curve(self) -> RadialCurve:
        return RadialCurve(self.radius, self.radius_prime)


@dataclass(frozen=True)
class DomainSpec:
    """The punctured disk: B minus the rotated obstacle."""

    obstacle: ObstacleSpec
    disk: DiskSpec

    def __post_init__(self):
        gap = self.gap_min
        if gap <= 0.0:
            raise InvalidDomainError(
                "free-rotation condition violated: obstacle circumradius "
                f"{self.obstacle.circumradius:.6g} must be < r1 - x0 = "
                f"{self.disk.r1 - self.disk.x0:.6g}"
            )

    @property
    def gap_min(self) -> float:
        """Width of the guaranteed annular clearance, g(0) - max f."""
        return self.disk.r1 - self.disk.x0 - self.obstacle.circumradius

    def at_rotation(self, t: float) -> "DomainSpec":
        return DomainSpec(self.obstacle.rotated(t), self.disk)

    def area(self) -> float:
        return math.pi * self.disk.r1**2 - self.obstacle.area()


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def obstacle_radius(spec: ObstacleSpec, phi: float) -> float:
    """Boundary radius of the rotated obstacle in direction phi."""
    return float(spec.radius(phi))


def disk_radius(disk: DiskSpec, phi: float) -> float:
    """Polar radius of the disk about the obstacle center."""
    return float(disk.radius(phi))


@dataclass(frozen=True)
class MonotonicityReport:
    """Successive-difference check of the disk radius on [0, pi]."""

    is_monotone: bool
    degenerate: bool
    min_successive_gap: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.is_monotone or self.degenerate


def check_disk_monotonicity(disk: DiskSpec, samples: int = 100) -> MonotonicityReport:
    """Sample g on [0, pi] and verify strict increase.

    By evenness of g the decrease on [pi, 2*pi] follows.  The concentric
    x0 = 0 case is constant and flagged degenerate rather than failed.
    """
    if samples < 3:
        raise ValueError("need at least 3 samples")
    phi = np.linspace(0.0, math.pi, samples)
    d = disk.radius(phi)
    gaps = np.diff(d)
    min_gap = float(gaps.min())
    if disk.is_concentric:
        return MonotonicityReport(
            is_monotone=False,
            degenerate=True,
            min_successive_gap=min_gap,
            samples=samples,
        )
    return MonotonicityReport(
        is_monotone=bool(np.all(gaps > 0.0)),
        degenerate=False,
        min_successive_gap=min_gap,
        samples=samples,
    )


def inner_product_eta_v(h: RadialCurve, phi: float) -> float:
    """Inner product of the outward unit normal with the right-angle rotation
    field v(z) = iz at the boundary point h(phi) e^{i phi}.

    Equals -h h' / sqrt(h^2 + h'^2); antisymmetric about every symmetry axis
    of h.
    """
    val = h.value(phi)
    der = h.derivative(phi)
    return float(-val * der / math.hypot(float(val), float(der)))


def outward_normal(h: RadialCurve, phi: float) -> np.ndarray:
    """Unit outward normal (h - i h') e^{i phi} / |...| as a 2-vector.

    Outward with respect to the region enclosed by the curve; when the curve
    bounds an obstacle cut out of a larger domain, the normal of the exterior
    domain is the negative of this vector.
    """
    val = float(h.value(phi))
    der = float(h.derivative(phi))
    z = (val - 1j * der) * np.exp(1j * phi)
    z /= math.hypot(val, der)
    return np.array([z.real, z.imag])


def incircle_circumcircle(spec: ObstacleSpec) -> tuple[float, float]:
    """Radii (min f, max f) of the incircle and circumcircle; rotation invariant."""
    return spec.inradius, spec.circumradius


def classify_configuration(
    domain: DomainSpec, tol: float = CLASSIFY_TOL
) -> tuple[Position, float]:
    """Classify the current rotation as ON, OFF or intermediate.

    OFF iff an inner vertex lies on the negative x-axis, ON iff an outer
    vertex does.  Returns (position, t mod 2*pi/n).
    """
    obstacle = domain.obstacle
    period = TWO_PI / obstacle.n
    reduced = math.fmod(obstacle.phase, period)
    if reduced < 0.0:
        reduced += period

    def _on_axis(angles: np.ndarray) -> bool:
        delta = np.abs(np.mod(angles - math.pi + math.pi, TWO_PI) - math.pi)
        return bool(np.min(delta) <= tol)

    if _on_axis(obstacle.inner_vertex_angles()):
        return Position.OFF, reduced
    if _on_axis(obstacle.outer_vertex_angles()):
        return Position.ON, reduced
    return Position.INTERMEDIATE, reduced


@dataclass(frozen=True)
class ContainmentReport:
    """Sampled check that reflected half-sectors land inside their neighbors."""

    holds: bool
    violations: int
    min_clearance: float
    equality_on_outer: bool
    sectors_checked: Sequence[int] = field(default_factory=tuple)


def sector_containment_diagnostic(
    domain: DomainSpec,
    t: float,
    samples: int = 200,
    tol: float = 1e-10,
) -> ContainmentReport:
    """Spot-check the sector reflection inclusions for rotation t in (0, pi/n).

    For each even k, the closure of the domain piece in sector k (upper
    family) reflected about the separating symmetry axis must land inside the
    closed piece in sector k+1, and symmetrically below the x-axis.  Sampled
    along the outer arc, the obstacle arc and the radial axis segments; a
    violation is any reflected point outside the closed target piece.
    """
    n = domain.obstacle.n
    if n % 2 != 0:
        raise ValueError("sector containment check requires even symmetry order")
    if not 0.0 < t < math.pi / n:
        raise ValueError("rotation must lie strictly inside (0, pi/n)")

    obstacle = domain.obstacle.rotated(0.0)
    disk = domain.disk
    sector = math.pi / n
    abs_tol = tol * disk.r1

    violations = 0
    min_clearance = math.inf
    checked = []

    # (source sector index, axis index) pairs: above the x-axis the smaller
    # piece is sector k, below it is sector k+1.
    jobs = [(k, k + 1) for k in range(0, n - 1, 2)]
    jobs += [(k + 1, k + 1) for k in range(n, 2 * n - 1, 2)]

    for src, axis_idx in jobs:
        checked.append(src)
        alpha = t + axis_idx * sector
        lo = t + src * sector
        hi = lo + sector
        interior = np.linspace(lo, hi, samples)

        pts = []
        outer_flag = []
        # outer arc and obstacle arc of the source piece
        pts.append(disk.radius(interior)[:, None] * _unit(interior))
        outer_flag.append(np.ones(samples, dtype=bool))
        pts.append(obstacle.body_radius(interior - t)[:, None] * _unit(interior))
        outer_flag.append(np.zeros(samples, dtype=bool))
        # radial segments on the two delimiting axes
        for edge in (lo, hi):
            r = np.linspace(
                float(obstacle.body_radius(edge - t)),
                float(disk.radius(edge)),
                samples // 4 + 2,
            )
            pts.append(r[:, None] * _unit(np.full(r.shape, edge)))
            outer_flag.append(np.zeros(r.shape, dtype=bool))

        p = np.vstack(pts)
        on_outer = np.concatenate(outer_flag)
        q = _reflect(p, alpha)
        rq = np.hypot(q[:, 0], q[:, 1])
        phiq = np.arctan2(q[:, 1], q[:, 0])

        clear_outer = disk.radius(phiq) - rq
        clear_inner = rq - obstacle.body_radius(phiq - t)
        bad = (clear_outer < -abs_tol) | (clear_inner < -abs_tol)
        violations += int(np.count_nonzero(bad))

        # strictness indicator: reflected outer-arc points away from the axis
        strict = on_outer.copy()
        strict[0] = strict[samples - 1] = False
        if np.any(strict):
            min_clearance = min(min_clearance, float(clear_outer[strict].min()))

    return ContainmentReport(
        holds=violations == 0,
        violations=violations,
        min_clearance=min_clearance,
        equality_on_outer=disk.is_concentric,
        sectors_checked=tuple(checked),
    )


def _unit(phi: np.ndarray) -> np.ndarray:
    return np.column_stack([np.cos(phi), np.sin(phi)])


def _reflect(points: np.ndarray, alpha: float) -> np.ndarray:
    """Reflect points about the line through the origin at angle alpha."""
    c, s = math.cos(2.0 * alpha), math.sin(2.0 * alpha)
    x, y = points[:, 0], points[:, 1]
    return np.column_stack([c * x + s * y, s * x - c * y])
