"""Distance-squared cost on the unit sphere: exponential/log charts,
cut-locus margins, and the spherical-cap construction where the target cap
fails c-convexity yet the polar cap opposite it stays inactive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .costs import CostModel, DomainSample, register_cost
from .errors import ConfigurationError, CutLocusError, DomainError
from .geometry import PredicateReport, check_c_convexity
from .solver import DiscreteMeasure, TransportPlan, solve_partial

ANTIPODE_TOL = 1e-6
UNIT_TOL = 1e-12


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise DomainError("cannot normalize the zero vector")
    return v / n


def _check_unit(v):
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise DomainError("sphere points must be unit vectors")
    return v


def geodesic_distance(x, y) -> float:
    return float(np.arccos(np.clip(np.dot(x, y), -1.0, 1.0)))


def geodesic_cost_value(x, y) -> float:
    """c(x, y) = d(x, y)^2 / 2 with the great-circle distance d."""
    d = geodesic_distance(x, y)
    return 0.5 * d * d


def log_map(base, x) -> np.ndarray:
    """Tangent vector at ``base`` whose exponential is ``x``."""
    base = _check_unit(base)
    x = _check_unit(x)
    d = geodesic_distance(base, x)
    if d > math.pi - ANTIPODE_TOL:
        raise CutLocusError("log map undefined at the cut locus (antipode)")
    if d < 1e-14:
        return np.zeros_like(base)
    w = x - math.cos(d) * base
    return d * w / np.linalg.norm(w)


def exp_map(base, v) -> np.ndarray:
    """Geodesic exponential of a tangent vector at ``base``."""
    base = _check_unit(base)
    v = np.asarray(v, dtype=float)
    t = np.linalg.norm(v)
    if t < 1e-300:
        return base.copy()
    return math.cos(t) * base + math.sin(t) * v / t


def tangent_basis(base) -> np.ndarray:
    """Orthonormal basis of the tangent space at ``base``, shape (n, n+1)."""
    base = _check_unit(base)
    # null space of <base, .> via QR of the projector columns
    m = np.eye(base.size) - np.outer(base, base)
    q, r = np.linalg.qr(m)
    cols = np.where(np.abs(np.diag(r)) > 1e-9)[0]
    return q[:, cols].T


class SphereCost(CostModel):
    """d^2/2 on the sphere as a CostModel; grad_x is the ambient-embedded
    tangent gradient -log_x(y)."""

    def __init__(self, ambient_dimension=3):
        super().__init__(
            ambient_dimension,
            value=geodesic_cost_value,
            smoothness_order=1,
            grad_x=lambda x, y: -log_map(x, y),
            grad_y=lambda x, y: -log_map(y, x),
            name="sphere",
        )

    def value_many(self, xs, y):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        d = np.arccos(np.clip(xs @ np.asarray(y, dtype=float), -1.0, 1.0))
        return 0.5 * d * d


def sphere_cost(ambient_dimension=3) -> SphereCost:
    return SphereCost(ambient_dimension)


register_cost("sphere", sphere_cost)


@dataclass(frozen=True)
class SphericalCap:
    """Cap of given Euclidean height around a center direction; membership
    is the inner-product threshold <v, center> >= 1 - height."""

    center: np.ndarray
    height: float

    def __post_init__(self):
        object.__setattr__(self, "center", _check_unit(self.center))
        if not 0.0 < self.height <= 2.0:
            raise DomainError("cap height must lie in (0, 2]")

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.center >= 1.0 - self.height


def fibonacci_sphere(count: int) -> np.ndarray:
    """Quasi-uniform lattice on S^2 (golden-angle spiral), shape (count, 3)."""
    if count < 1:
        raise DomainError("need at least one sample")
    i = np.arange(count)
    z = 1.0 - 2.0 * (i + 0.5) / count
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def fibonacci_cap(cap: SphericalCap, count: int) -> np.ndarray:
    """Quasi-uniform lattice on a spherical cap (S^2 only)."""
    if cap.center.size != 3:
        raise DomainError("cap sampling is implemented for S^2 only")
    i = np.arange(count)
    # uniform in z over the cap band around the north pole, then rotate
    z = 1.0 - cap.height * (i + 0.5) / count
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    north = np.array([0.0, 0.0, 1.0])
    if np.allclose(cap.center, north):
        return pts
    if np.allclose(cap.center, -north):
        return pts * np.array([1.0, 1.0, -1.0])
    axis = unit(np.cross(north, cap.center))
    ang = geodesic_distance(north, cap.center)
    k = axis
    kx = np.array([
        [0, -k[2], k[1]],
        [k[2], 0, -k[0]],
        [-k[1], k[0], 0],
    ])
    rot = np.eye(3) + math.sin(ang) * kx + (1 - math.cos(ang)) * (kx @ kx)
    return pts @ rot.T


def cut_locus_margin(plan: TransportPlan) -> float:
    """min over positive-mass pairs of the distance from the target to the
    source's cut locus; on the sphere that is pi minus the pair distance."""
    worst = math.pi
    for x, y, _ in plan.pair_points():
        worst = min(worst, math.pi - geodesic_distance(x, y))
    return worst


@dataclass(frozen=True)
class CapExampleReport:
    resolution: int
    source_mass_in_target_cap: float
    target_mass: float
    transported_mass: float
    enlarged_cap_source_mass: float
    feasibility_excess: float
    north_cap_active_mass: float
    mass_margin: float
    north_cap_inactive: bool
    tan_theta: float
    two_theta: float
    max_transport_distance: float
    cut_locus_margin: float
    objective: float

    def to_dict(self) -> dict:
        return {k: float(v) if isinstance(v, (int, float)) else v
                for k, v in self.__dict__.items()}


def cap_opening_tangent(big_height: float) -> float:
    """tan(theta) for the half-opening angle theta of a cap of the given
    Euclidean height: sqrt(1 - (1-h)^2) / (1-h)."""
    c = 1.0 - big_height
    return math.sqrt(max(0.0, 1.0 - c * c)) / c


def run_cap_example(
    resolution: int = 1000,
    mass_margin: float = 1e-9,
    rho: float = 0.1,
    cap_height: float = 1.0 / 16.0,
    big_height: float = 1.0 / 8.0,
    target_count: int | None = None,
) -> CapExampleReport:
    """Whole-sphere source versus a south-cap target: solve the partial
    problem and report the active source mass left in the antipodal north
    cap, which the modification argument predicts to be zero."""
    if resolution < 500:
        raise DomainError("resolution must give >= 500 source points")
    north = np.array([0.0, 0.0, 1.0])
    south = -north
    target_cap = SphericalCap(south, cap_height)
    big_cap = SphericalCap(south, big_height)
    north_cap = SphericalCap(north, cap_height)

    source_pts = fibonacci_sphere(resolution)
    f = DiscreteMeasure(source_pts, np.full(resolution, 1.0 / resolution))
    mass_in_cap = float(f.weights[target_cap.contains(source_pts)].sum())
    mass_in_big = float(f.weights[big_cap.contains(source_pts)].sum())
    if mass_in_cap <= 0:
        raise ConfigurationError("no source mass inside the target cap")

    nt = target_count or max(32, resolution // 16)
    target_pts = fibonacci_cap(target_cap, nt)
    g_total = (1.0 + rho) * mass_in_cap
    g = DiscreteMeasure(target_pts, np.full(nt, g_total / nt))
    m = (1.0 + rho / 2.0) * mass_in_cap

    excess = mass_in_big - g_total
    if excess <= 0:
        raise ConfigurationError(
            "enlarged-cap source mass does not dominate the target mass; "
            "adjust rho or the cap heights"
        )

    cost = sphere_cost(3)
    plan = solve_partial(f, g, m, cost)
    in_north = north_cap.contains(source_pts)
    north_mass = float(plan.left_marginal[in_north].sum())
    max_dist = max(
        (geodesic_distance(x, y) for x, y, _ in plan.pair_points()),
        default=0.0,
    )
    tan_theta = cap_opening_tangent(big_height)
    return CapExampleReport(
        resolution=resolution,
        source_mass_in_target_cap=mass_in_cap,
        target_mass=g_total,
        transported_mass=m,
        enlarged_cap_source_mass=mass_in_big,
        feasibility_excess=excess,
        north_cap_active_mass=north_mass,
        mass_margin=mass_margin,
        north_cap_inactive=north_mass <= mass_margin,
        tan_theta=tan_theta,
        two_theta=2.0 * math.atan(tan_theta),
        max_transport_distance=max_dist,
        cut_locus_margin=cut_locus_margin(plan),
        objective=plan.objective,
    )


def annulus_image_demo(
    cap_height: float = 1.0 / 16.0,
    sample_count: int = 400,
    base=None,
    cap_center=None,
) -> PredicateReport:
    """Map a dense cap sample through y -> grad_x c(base, y) and run the
    c-convexity midpoint check.  For the antipodal cap the image is an
    annulus around the cut locus and the check fails."""
    north = np.array([0.0, 0.0, 1.0]) if base is None else _check_unit(base)
    center = -north if cap_center is None else _check_unit(cap_center)
    cap = SphericalCap(center, cap_height)
    pts = fibonacci_cap(cap, sample_count)
    # drop points numerically at the cut locus of the basepoint
    keep = np.array(
        [geodesic_distance(north, p) < math.pi - ANTIPODE_TOL for p in pts]
    )
    pts = pts[keep]
    if len(pts) < 4:
        raise DomainError("too few usable cap samples")
    return check_c_convexity(sphere_cost(3), north, DomainSample(pts, "target"))
