"""Sampled certificates for the geometric predicates: interior cone and
ball conditions, envelope semiconvexity, c-convexity of the target image,
the curvature threshold, and the Hoelder exponent formula.

A passing report means "no violation found at this resolution"; it is not
a proof.  Every report records its worst margin and, on failure, a witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .boundary import ActiveRegionField, ConeEnvelope
from .costs import CostConstants, CostModel, DomainSample
from .errors import DegenerateInputError, DomainError

ALPHA_CAP = 1e12


@dataclass(frozen=True)
class ConeProfile:
    """Opening parameter alpha and reach delta of the interior cones.

    alpha = cot(theta) for half-angle theta; delta uses the conservative
    second-order remainder rule delta = b1 cos(theta) / (2 c2).
    """

    delta: float
    alpha: float
    capped: bool = False


@dataclass(frozen=True)
class PredicateReport:
    predicate: str
    passed: bool
    worst_margin: float
    worst_witness: tuple | None
    samples_checked: int
    degenerate: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        witness = None
        if self.worst_witness is not None:
            witness = [np.asarray(w, dtype=float).tolist()
                       for w in self.worst_witness]
        return {
            "predicate": self.predicate,
            "pass": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "worst_witness": witness,
            "samples_checked": int(self.samples_checked),
            "degenerate": bool(self.degenerate),
            "note": self.note,
        }


def cone_profile(
    cost: CostModel, constants: CostConstants, theta: float
) -> ConeProfile:
    """Profile (delta, alpha) for the cost sublevel sets at half-angle
    ``theta``: the linear decay b1 cos(theta) |x| dominates the quadratic
    remainder (c2/2)|x|^2 for |x| <= b1 cos(theta)/c2; half of that reach
    is kept as safety margin."""
    if not 0.0 < theta < math.pi / 2:
        raise DomainError("theta must lie in (0, pi/2)")
    if constants.b1 <= 0.0:
        raise DegenerateInputError("b1 <= 0: no cone direction available")
    if constants.c2 <= 0.0:
        raise DegenerateInputError("c2 <= 0: no remainder bound available")
    cost._require_order(2)
    alpha = math.tan(math.pi / 2 - theta)
    capped = alpha > ALPHA_CAP
    if capped:
        alpha = ALPHA_CAP
    delta = constants.b1 * math.cos(theta) / (2.0 * constants.c2)
    return ConeProfile(delta=delta, alpha=alpha, capped=capped)


def _grid_cell_of(grid, points):
    """Cell multi-indices of points; -1 rows mark out-of-grid points."""
    pts = np.atleast_2d(points)
    idx = np.floor((pts - grid.lo) / grid.spacing).astype(int)
    ok = np.all((idx >= 0) & (idx < np.array(grid.resolution)), axis=1)
    idx[~ok] = -1
    return idx, ok


def _activity_trees(field: ActiveRegionField):
    centers = field.grid.cell_centers()
    flat = field.indicator.ravel()
    active = centers[flat]
    inactive = centers[~flat]
    t_act = cKDTree(active) if len(active) else None
    t_inact = cKDTree(inactive) if len(inactive) else None
    return t_act, t_inact


def _cone_ray_fan(normal, alpha, rays, seed):
    """Deterministic unit directions inside the cone around ``normal`` with
    opening alpha (half-angle atan(1/alpha)); includes the axis."""
    n = normal.size
    theta_max = math.atan(1.0 / alpha)
    rng = np.random.default_rng(seed)
    dirs = [normal]
    while len(dirs) < rays:
        w = rng.standard_normal(n)
        w -= (w @ normal) * normal
        nw = np.linalg.norm(w)
        if nw < 1e-12:
            continue
        w /= nw
        beta = theta_max * rng.random() * 0.999
        dirs.append(math.cos(beta) * normal + math.sin(beta) * w)
    return np.array(dirs)


def check_cone_condition(
    field: ActiveRegionField,
    samples,
    profile: ConeProfile,
    rays: int = 64,
    radii: int = 8,
    seed: int = 0,
) -> PredicateReport:
    """Test a deterministic ray fan inside x + C_alpha(nu^perp) out to the
    profile's delta: every tested in-grid point must land in an active cell.

    Margin: minus the distance of the worst violator to the active set, or
    the smallest clearance of any tested point to the inactive set when all
    points pass.
    """
    if not samples:
        raise DomainError("no boundary samples to check")
    grid = field.grid
    t_act, t_inact = _activity_trees(field)
    worst = math.inf
    witness = None
    checked = 0
    rr = profile.delta * (np.arange(1, radii + 1) / radii)
    for k, s in enumerate(samples):
        dirs = _cone_ray_fan(s.normal, profile.alpha, rays, seed=[seed, k])
        points = (s.point[None, None, :]
                  + rr[None, :, None] * dirs[:, None, :]).reshape(-1, grid.dimension)
        idx, ok = _grid_cell_of(grid, points)
        points = points[ok]
        idx = idx[ok]
        if len(points) == 0:
            continue
        checked += len(points)
        active = field.indicator[tuple(idx.T)]
        if np.all(active):
            if t_inact is not None:
                margin = float(t_inact.query(points)[0].min())
            else:
                margin = profile.delta
        else:
            violators = points[~active]
            if t_act is not None:
                margin = -float(t_act.query(violators)[0].max())
            else:
                margin = -profile.delta
        if margin < worst:
            worst = margin
            witness = (s.point, s.normal)
    return PredicateReport(
        predicate="cone_condition",
        passed=worst >= 0,
        worst_margin=worst,
        worst_witness=witness if worst < 0 else None,
        samples_checked=len(samples),
        note=f"profile delta={profile.delta:.6g} alpha={profile.alpha:.6g}",
    )


def check_ball_condition(
    field: ActiveRegionField,
    samples,
    constants: CostConstants,
    radius: float | None = None,
    radius_factor: float = 0.9,
) -> PredicateReport:
    """Interior ball test with radius r = b1/c2 (or an explicit override):
    the ball of radius ``radius_factor * r`` centered at
    x + radius_factor * r * nu must contain no inactive cell center.

    Margin per sample: distance from the ball center to the inactive set
    minus the tested radius, so negatives measure penetration depth.
    """
    if not samples:
        raise DomainError("no boundary samples to check")
    if radius is None:
        if constants.b1 <= 0 or constants.c2 <= 0:
            raise DegenerateInputError("b1 and c2 must be positive")
        radius = constants.b1 / constants.c2
    r_test = radius_factor * radius
    _, t_inact = _activity_trees(field)
    worst = math.inf
    witness = None
    for s in samples:
        center = s.point + r_test * s.normal
        if t_inact is None:
            margin = r_test
        else:
            margin = float(t_inact.query(center)[0]) - r_test
        if margin < worst:
            worst = margin
            witness = (s.point, center)
    return PredicateReport(
        predicate="ball_condition",
        passed=worst >= 0,
        worst_margin=worst,
        worst_witness=witness if worst < 0 else None,
        samples_checked=len(samples),
        note=f"radius={radius:.6g} factor={radius_factor}",
    )


def check_semiconvexity(
    envelope: ConeEnvelope, r: float, tol: float = 0.1
) -> PredicateReport:
    """Discrete semiconvexity of the envelope heights: along every axis,
    phi(z+h) + phi(z-h) - 2 phi(z) >= -(h^2/r)(1 + tol)."""
    if r <= 0:
        raise DomainError("ball radius r must be positive")
    vals = envelope.values
    if min(vals.shape) < 3:
        raise DomainError("envelope grid needs >= 3 nodes per axis")
    worst = math.inf
    witness = None
    checked = 0
    for ax, coords in enumerate(envelope.axes):
        h = coords[1] - coords[0]
        bound = (h * h / r) * (1.0 + tol)
        sl_p = [slice(None)] * vals.ndim
        sl_m = [slice(None)] * vals.ndim
        sl_0 = [slice(None)] * vals.ndim
        sl_p[ax] = slice(2, None)
        sl_m[ax] = slice(0, -2)
        sl_0[ax] = slice(1, -1)
        sec = vals[tuple(sl_p)] + vals[tuple(sl_m)] - 2.0 * vals[tuple(sl_0)]
        margins = sec + bound
        checked += margins.size
        k = np.unravel_index(np.argmin(margins), margins.shape)
        if margins[k] < worst:
            worst = float(margins[k])
            node = list(k)
            node[ax] += 1
            witness = (np.array([envelope.axes[a][node[a]]
                                 for a in range(vals.ndim)]),)
    return PredicateReport(
        predicate="semiconvexity",
        passed=worst >= 0,
        worst_margin=worst,
        worst_witness=witness if worst < 0 else None,
        samples_checked=checked,
        note=f"r={r:.6g} tol={tol}",
    )


def check_c_convexity(
    cost: CostModel,
    x,
    lam: DomainSample,
    tol_factor: float = 2.0,
) -> PredicateReport:
    """Sampled necessary condition for convexity of the gradient image
    c_x(x, Lambda): every midpoint of two image points must lie within
    ``tol_factor`` local sample spacings of some image point.

    Detects holes (the spherical-cap annulus) while staying robust to the
    sampling resolution.  A rank-deficient image is flagged degenerate.
    """
    x = np.asarray(x, dtype=float)
    n = cost.dimension
    if len(lam.points) < n + 1:
        raise DomainError(f"need at least {n + 1} target samples")
    image = np.array([cost.grad_x(x, y) for y in lam.points])
    centered = image - image.mean(axis=0)
    rank = np.linalg.matrix_rank(centered, tol=1e-10)
    scale = max(1.0, float(np.linalg.norm(image, axis=1).max()))
    collapsed = float(np.linalg.norm(centered, axis=1).max()) < 1e-6 * scale
    if (n >= 2 and rank <= 1) or collapsed:
        return PredicateReport(
            predicate="c_convexity",
            passed=True,
            worst_margin=0.0,
            worst_witness=None,
            samples_checked=len(image),
            degenerate=True,
            note="image is collinear/degenerate; convexity not assessable",
        )
    tree = cKDTree(image)
    # resolution scale: the coarsest nearest-neighbor spacing in the image
    tol = tol_factor * float(tree.query(image, k=2)[0][:, 1].max())
    worst = math.inf
    witness = None
    k = len(image)
    pairs_checked = 0
    for i in range(k - 1):
        mids = 0.5 * (image[i + 1:] + image[i])
        gaps = tree.query(mids)[0]
        margins = tol - gaps
        pairs_checked += len(mids)
        j = int(np.argmin(margins))
        if margins[j] < worst:
            worst = float(margins[j])
            witness = (image[i], image[i + 1 + j], mids[j])
    return PredicateReport(
        predicate="c_convexity",
        passed=worst >= 0,
        worst_margin=worst,
        worst_witness=witness if worst < 0 else None,
        samples_checked=pairs_checked,
        note=f"tol_factor={tol_factor}",
    )


def curvature_threshold(a1: float, a2: float, n: int) -> float:
    """Principal-curvature threshold a2^n / a1 above which a smooth convex
    target stays c-convex."""
    if a1 <= 0:
        raise DomainError("a1 must be positive")
    return a2**n / a1


def holder_exponent(p, n: int) -> float:
    """Exponent (2p - n - 1) / (2p(2n - 1) - n + 1); at p = infinity the
    limit 1/(2n - 1)."""
    if n < 1:
        raise DomainError("dimension n must be >= 1")
    if p == math.inf:
        return 1.0 / (2 * n - 1)
    if p <= (n + 1) / 2:
        raise DomainError(
            f"p must exceed (n+1)/2 = {(n + 1) / 2} (exponent nonpositive)"
        )
    return (2 * p - n - 1) / (2 * p * (2 * n - 1) - n + 1)
