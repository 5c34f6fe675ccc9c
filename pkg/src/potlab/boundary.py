"""Active region as a union of cost sublevel sets on a grid, free-boundary
extraction with free normals, and the cone-envelope reconstruction of the
boundary as a supremum of cone functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .costs import CostModel
from .errors import DegenerateInputError, DimensionMismatchError, DomainError
from .solver import TransportPlan

MIN_RESOLUTION = 8


@dataclass(frozen=True)
class EvaluationGrid:
    """Regular cell grid: per-axis ranges and resolutions; cells are
    addressed by their centers."""

    lo: np.ndarray
    hi: np.ndarray
    resolution: tuple

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        res = tuple(int(r) for r in np.atleast_1d(self.resolution))
        if len(res) == 1 and lo.size > 1:
            res = res * lo.size
        if lo.shape != hi.shape or len(res) != lo.size:
            raise DimensionMismatchError("grid ranges/resolution mismatch")
        if np.any(hi <= lo):
            raise DomainError("grid ranges must be increasing")
        if min(res) < MIN_RESOLUTION:
            raise DomainError(f"grid resolution must be >= {MIN_RESOLUTION}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "resolution", res)

    @property
    def dimension(self) -> int:
        return self.lo.size

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / np.array(self.resolution)

    @property
    def cell_size(self) -> float:
        return float(self.spacing.max())

    def axis_centers(self, k) -> np.ndarray:
        h = self.spacing[k]
        return self.lo[k] + h * (np.arange(self.resolution[k]) + 0.5)

    def cell_centers(self) -> np.ndarray:
        """All cell centers, shape (prod(resolution), n), C order."""
        axes = [self.axis_centers(k) for k in range(self.dimension)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @classmethod
    def covering(cls, points, resolution, margin_cells=2):
        """Grid covering the bounding box of ``points`` with a margin of at
        least ``margin_cells`` cells on every side."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = np.where(hi - lo > 0, hi - lo, 1.0)
        res = np.atleast_1d(resolution)
        if res.size == 1:
            res = np.full(pts.shape[1], int(res[0]))
        pad = margin_cells * span / np.maximum(res - 2 * margin_cells, 1)
        return cls(lo - pad, hi + pad, tuple(int(r) for r in res))


@dataclass(frozen=True)
class ActiveRegionField:
    """Boolean activity indicator per cell, with the generating plan pair
    witnessing each cell's activity."""

    grid: EvaluationGrid
    indicator: np.ndarray  # bool, shape grid.resolution
    witness: np.ndarray  # int index into generating_pairs, shape grid.resolution
    generating_pairs: tuple  # of (x_bar, y_bar, threshold)

    @property
    def active_count(self) -> int:
        return int(self.indicator.sum())


@dataclass(frozen=True)
class FreeBoundarySample:
    """Interface cell with its generating pair's target and free normal."""

    point: np.ndarray
    target: np.ndarray
    normal: np.ndarray
    threshold: float
    cell: tuple


def active_region(
    plan: TransportPlan, cost: CostModel, grid: EvaluationGrid
) -> ActiveRegionField:
    """Mark a cell active iff some plan pair (x_bar, y_bar) has
    c(cell, y_bar) < c(x_bar, y_bar); record the pair minimizing the
    crossing value as the cell's witness."""
    if grid.dimension != cost.dimension:
        raise DimensionMismatchError(
            f"grid dimension {grid.dimension} != cost dimension "
            f"{cost.dimension}"
        )
    pairs = [
        (xb, yb, cost.value(xb, yb)) for xb, yb, _ in plan.pair_points()
    ]
    centers = grid.cell_centers()
    best = np.full(len(centers), np.inf)
    arg = np.full(len(centers), -1, dtype=int)
    for k, (xb, yb, b) in enumerate(pairs):
        vals = cost.value_many(centers, yb) - b
        better = vals < best
        best[better] = vals[better]
        arg[better] = k
    shape = grid.resolution
    return ActiveRegionField(
        grid=grid,
        indicator=(best < 0).reshape(shape),
        witness=arg.reshape(shape),
        generating_pairs=tuple(pairs),
    )


def _shifted_any(arr, pad_value):
    """OR over the 2n face-shifted copies of a boolean array; out-of-grid
    neighbors contribute ``pad_value``."""
    out = np.zeros_like(arr, dtype=bool)
    n = arr.ndim
    for ax in range(n):
        padded = np.pad(
            arr, [(1, 1) if a == ax else (0, 0) for a in range(n)],
            constant_values=pad_value,
        )
        sl_lo = [slice(None)] * n
        sl_hi = [slice(None)] * n
        sl_lo[ax] = slice(0, arr.shape[ax])
        sl_hi[ax] = slice(2, 2 + arr.shape[ax])
        out |= padded[tuple(sl_lo)]
        out |= padded[tuple(sl_hi)]
    return out


def free_normal(x, y, cost: CostModel, tol: float = 1e-10) -> np.ndarray:
    """The negated normalized x-gradient -c_x(x,y)/|c_x(x,y)|."""
    gx = cost.grad_x(x, y)
    norm = np.linalg.norm(gx)
    if norm <= tol:
        raise DegenerateInputError(
            "vanishing x-gradient: free normal undefined (b1 ~ 0)"
        )
    return -gx / norm


def extract_boundary(
    field: ActiveRegionField, omega_mask: np.ndarray, cost: CostModel
) -> list[FreeBoundarySample]:
    """Active cells with an inactive face neighbor, strictly inside the
    source-domain mask (cells touching the mask edge belong to the fixed
    boundary and are excluded)."""
    act = field.indicator
    mask = np.asarray(omega_mask, dtype=bool)
    if mask.shape != act.shape:
        raise DimensionMismatchError("omega mask shape differs from grid")
    has_inactive_neighbor = _shifted_any(~act, pad_value=True)
    touches_mask_edge = _shifted_any(~mask, pad_value=True)
    interface = act & mask & has_inactive_neighbor & ~touches_mask_edge
    samples = []
    grid = field.grid
    axes = [grid.axis_centers(k) for k in range(grid.dimension)]
    for cell in zip(*np.nonzero(interface)):
        point = np.array([axes[k][cell[k]] for k in range(grid.dimension)])
        xb, yb, b = field.generating_pairs[field.witness[cell]]
        samples.append(
            FreeBoundarySample(
                point=point,
                target=np.asarray(yb, dtype=float),
                normal=free_normal(point, yb, cost),
                threshold=float(b),
                cell=tuple(int(c) for c in cell),
            )
        )
    return samples


# ---------------------------------------------------------------------------
# Cone envelope
# ---------------------------------------------------------------------------


def _reflection_to_minus_en(normal):
    """Orthogonal map (Householder reflection) sending ``normal`` to -e_n."""
    n = normal.size
    en = np.zeros(n)
    en[-1] = 1.0
    v = normal + en
    nv = np.linalg.norm(v)
    if nv < 1e-12:  # already -e_n
        return np.eye(n)
    v = v / nv
    return np.eye(n) - 2.0 * np.outer(v, v)


@dataclass(frozen=True)
class ConeEnvelope:
    """Supremum of cone functions over boundary samples, on an (n-1)-grid
    in the rotated frame where the base normal is -e_n.

    Heights follow the contract phi(z') = max_y [y_n + (1/alpha)|z' - y'|],
    so phi is (1/alpha)-Lipschitz by construction.
    """

    base_normal: np.ndarray
    origin: np.ndarray
    rotation: np.ndarray  # maps base_normal to -e_n
    alpha: float
    apexes: np.ndarray  # (k, n) rotated sample coordinates
    axes: tuple  # (n-1) arrays of grid coordinates
    values: np.ndarray  # phi on the grid, shape = axis lengths

    @property
    def spacing(self) -> float:
        hs = [ax[1] - ax[0] for ax in self.axes if len(ax) > 1]
        return float(max(hs)) if hs else 0.0

    def height(self, zprime) -> float:
        """Exact (continuous) envelope value at a projected point."""
        zp = np.atleast_1d(np.asarray(zprime, dtype=float))
        d = np.linalg.norm(self.apexes[:, :-1] - zp, axis=1)
        return float(np.max(self.apexes[:, -1] + d / self.alpha))

    def grid_points(self) -> np.ndarray:
        """Graph points (z', phi(z')) in rotated coordinates."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        zp = np.stack([m.ravel() for m in mesh], axis=-1)
        return np.column_stack([zp, self.values.ravel()])

    def graph_points_world(self) -> np.ndarray:
        """Graph points embedded back into the original coordinates."""
        q = self.grid_points()
        return q @ self.rotation + self.origin  # rotation is symmetric

    def sampled_lipschitz(self) -> float:
        """Max slope of phi between face-adjacent grid nodes."""
        worst = 0.0
        for ax, coords in enumerate(self.axes):
            if len(coords) < 2:
                continue
            h = coords[1] - coords[0]
            diff = np.abs(np.diff(self.values, axis=ax)) / h
            if diff.size:
                worst = max(worst, float(diff.max()))
        return worst


def cone_envelope(
    samples,
    base_normal,
    alpha: float,
    window,
    grid_resolution: int = 9,
) -> ConeEnvelope:
    """Build the boundary envelope phi(z') = sup of cone functions over the
    samples inside ``window`` (an axis-aligned (lo, hi) box)."""
    if alpha <= 0:
        raise DomainError("cone opening alpha must be positive")
    base_normal = np.asarray(base_normal, dtype=float)
    base_normal = base_normal / np.linalg.norm(base_normal)
    lo, hi = (np.asarray(w, dtype=float) for w in window)
    inside = [
        s for s in samples
        if np.all(s.point >= lo) and np.all(s.point <= hi)
    ]
    if not inside:
        raise DomainError("no boundary samples inside the window")
    R = _reflection_to_minus_en(base_normal)
    origin = min(
        inside, key=lambda s: np.linalg.norm(s.point - 0.5 * (lo + hi))
    ).point
    apexes = np.array([(R @ (s.point - origin)) for s in inside])
    zlo = apexes[:, :-1].min(axis=0)
    zhi = apexes[:, :-1].max(axis=0)
    span = np.where(zhi - zlo > 0, zhi - zlo, 1e-12)
    axes = tuple(
        np.linspace(zlo[k], zlo[k] + span[k], grid_resolution)
        for k in range(len(zlo))
    )
    mesh = np.meshgrid(*axes, indexing="ij")
    zp = np.stack([m.ravel() for m in mesh], axis=-1)
    d = np.linalg.norm(
        zp[:, None, :] - apexes[None, :, :-1], axis=2
    )
    vals = np.max(apexes[None, :, -1] + d / alpha, axis=1)
    env = ConeEnvelope(
        base_normal=base_normal,
        origin=origin,
        rotation=R,
        alpha=float(alpha),
        apexes=apexes,
        axes=axes,
        values=vals.reshape([len(a) for a in axes]),
    )
    # cones are evaluated exactly, so the sampled slope can only exceed the
    # bound through a programming error
    if env.sampled_lipschitz() > 1.0 / alpha + 1e-9:
        raise DomainError(
            "envelope violates its Lipschitz bound (internal error)"
        )
    return env


def graph_match(envelope: ConeEnvelope, samples) -> float:
    """Two-sided Hausdorff distance between the envelope graph and the
    boundary samples, measured in world coordinates."""
    pts = np.array([s.point for s in samples])
    if pts.size == 0:
        raise DomainError("no boundary samples to match against")
    graph = envelope.graph_points_world()
    t1 = cKDTree(pts)
    t2 = cKDTree(graph)
    d_graph_to_samples = t1.query(graph)[0].max()
    d_samples_to_graph = t2.query(pts)[0].max()
    return float(max(d_graph_to_samples, d_samples_to_graph))


def normal_field_holder(samples, exponent: float) -> float:
    """Sampled Hoelder seminorm of the free-normal field along the boundary:
    max over pairs of |nu1 - nu2| / |x1 - x2|^exponent."""
    if len(samples) < 2:
        raise DomainError("need at least two boundary samples")
    pts = np.array([s.point for s in samples])
    nus = np.array([s.normal for s in samples])
    worst = 0.0
    for i in range(len(pts) - 1):
        dx = np.linalg.norm(pts[i + 1:] - pts[i], axis=1)
        dn = np.linalg.norm(nus[i + 1:] - nus[i], axis=1)
        ok = dx > 0
        if np.any(ok):
            worst = max(worst, float((dn[ok] / dx[ok] ** exponent).max()))
    return worst
