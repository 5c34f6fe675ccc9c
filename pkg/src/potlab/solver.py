"""Exact discrete optimal partial transport.

The partial problem (marginals dominated by f and g, transported mass m) is
reduced to a balanced transportation problem by appending a dummy source
absorbing ||g|| - m and a dummy target absorbing ||f|| - m.  Dummy arcs to
and from real nodes cost zero; the dummy-dummy arc is excluded outright,
which forces the real-real mass to equal m exactly.  The balanced problem
is solved by successive shortest paths with node potentials, so optimal
dual potentials (the discrete optimality certificate) come out for free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .costs import CostModel
from .errors import DimensionMismatchError, DomainError, PotlabError

MASS_TOL = 1e-12
BRUTE_FORCE_CAP = 6


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud with strictly positive weights."""

    support: np.ndarray  # (k, n)
    weights: np.ndarray  # (k,)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.support, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(pts) != len(w):
            raise DomainError("support and weights lengths differ")
        if len(pts) == 0:
            raise DomainError("measure must have non-empty support")
        if np.any(w <= 0):
            raise DomainError("weights must be strictly positive")
        object.__setattr__(self, "support", pts)
        object.__setattr__(self, "weights", w)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def dimension(self) -> int:
        return self.support.shape[1]

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class ActivePair:
    """One selected (source, target) pair of the transport map."""

    source: int
    target: int


@dataclass(frozen=True)
class TransportPlan:
    """Sparse optimal coupling with marginals and dual potentials."""

    entries: tuple  # of (source index, target index, mass > 0)
    objective: float
    mass: float
    left_marginal: np.ndarray
    right_marginal: np.ndarray
    dual_u: np.ndarray
    dual_v: np.ndarray
    source: DiscreteMeasure
    target: DiscreteMeasure

    def pair_points(self):
        """(x_bar, y_bar, mass) coordinate triples of the plan entries."""
        return [
            (self.source.support[i], self.target.support[j], w)
            for i, j, w in self.entries
        ]


def _cost_matrix(f, g, cost):
    if f.dimension != g.dimension or f.dimension != cost.dimension:
        raise DimensionMismatchError(
            f"cost dimension {cost.dimension}, measures of dimensions "
            f"{f.dimension} and {g.dimension}"
        )
    C = np.empty((len(f), len(g)))
    for j, y in enumerate(g.support):
        C[:, j] = cost.value_many(f.support, y)
    return C


def _validated_mass(f, g, m):
    cap = min(f.total_mass, g.total_mass)
    if not np.isfinite(m) or m <= 0:
        raise DomainError(f"transported mass must be positive, got {m}")
    if m > cap + MASS_TOL:
        raise DomainError(
            f"transported mass {m} exceeds min marginal mass {cap}"
        )
    return min(float(m), cap)


def _augmented(C, f, g, m):
    ns, nt = C.shape
    Caug = np.zeros((ns + 1, nt + 1))
    Caug[:ns, :nt] = C
    a = np.concatenate([f.weights, [g.total_mass - m]])
    b = np.concatenate([g.weights, [f.total_mass - m]])
    return Caug, a, b


def solve_partial(
    f: DiscreteMeasure, g: DiscreteMeasure, m: float, cost: CostModel
) -> TransportPlan:
    """Globally optimal partial transport plan of mass ``m``."""
    m = _validated_mass(f, g, m)
    C = _cost_matrix(f, g, cost)
    Caug, a, b = _augmented(C, f, g, m)
    X, pu, pv = _min_cost_flow(Caug, a, b, forbidden=(len(f), len(g)))
    return _build_plan(X, pu, pv, C, f, g, m)


def _min_cost_flow(C, a, b, forbidden):
    """Dense successive shortest paths with potentials on a bipartite graph.

    Maintains C[i,j] - pu[i] - pv[j] >= 0 on all admissible arcs, with
    equality on arcs carrying flow.  The forbidden arc never enters.
    """
    ns, nt = C.shape
    fi, fj = forbidden
    X = np.zeros((ns, nt))
    pu = np.zeros(ns)
    # costs may be negative (e.g. -log at separation > 1); column minima
    # make the initial reduced costs non-negative
    Cmin = C.copy()
    Cmin[fi, fj] = np.inf
    pv = np.minimum(Cmin.min(axis=0), 0.0)
    ra = a.astype(float).copy()
    rb = b.astype(float).copy()
    inf = np.inf
    # supply and demand totals agree only up to rounding; residues below
    # eps are dropped rather than routed
    eps = 1e-12 * max(1.0, float(a.sum()))

    while np.any(ra > eps):
        dS = np.where(ra > eps, 0.0, inf)
        dT = np.full(nt, inf)
        doneS = np.zeros(ns, dtype=bool)
        doneT = np.zeros(nt, dtype=bool)
        parT = np.full(nt, -1, dtype=int)
        parS = np.full(ns, -1, dtype=int)
        sink = -1
        while True:
            mS = np.where(doneS, inf, dS)
            mT = np.where(doneT, inf, dT)
            iS = int(np.argmin(mS))
            iT = int(np.argmin(mT))
            if mS[iS] == inf and mT[iT] == inf:
                raise PotlabError(
                    "internal error: augmented flow network infeasible"
                )
            if mT[iT] <= mS[iS]:
                j = iT
                doneT[j] = True
                if rb[j] > eps:
                    sink = j
                    break
                # reverse arcs along positive flow; reduced cost is 0 up to
                # rounding, clip at 0 to keep Dijkstra labels monotone
                rc = np.maximum(pu + pv[j] - C[:, j], 0.0)
                cand = dT[j] + rc
                mask = (~doneS) & (X[:, j] > 0) & (cand < dS)
                dS[mask] = cand[mask]
                parS[mask] = j
            else:
                i = iS
                doneS[i] = True
                rc = np.maximum(C[i, :] - pu[i] - pv, 0.0)
                cand = dS[i] + rc
                if i == fi:
                    cand = cand.copy()
                    cand[fj] = inf
                mask = (~doneT) & (cand < dT)
                dT[mask] = cand[mask]
                parT[mask] = i
        D = dT[sink]
        pu -= np.minimum(dS, D)
        pv += np.minimum(dT, D)
        # walk the alternating path back to an excess source
        path = []  # arcs (i, j, +1 forward / -1 reverse)
        j = sink
        while True:
            i = parT[j]
            path.append((i, j, +1))
            if parS[i] < 0:
                start = i
                break
            jprev = parS[i]
            path.append((i, jprev, -1))
            j = jprev
        delta = min(ra[start], rb[sink])
        for i, j, sign in path:
            if sign < 0:
                delta = min(delta, X[i, j])
        for i, j, sign in path:
            X[i, j] += sign * delta
        ra[start] -= delta
        rb[sink] -= delta
    return X, pu, pv


def _build_plan(X, pu, pv, C, f, g, m):
    ns, nt = len(f), len(g)
    real = X[:ns, :nt]
    ii, jj = np.nonzero(real)
    entries = tuple((int(i), int(j), float(real[i, j])) for i, j in zip(ii, jj))
    return TransportPlan(
        entries=entries,
        objective=float(np.sum(real * C)),
        mass=float(m),
        left_marginal=real.sum(axis=1),
        right_marginal=real.sum(axis=0),
        dual_u=pu[:ns].copy(),
        dual_v=pv[:nt].copy(),
        source=f,
        target=g,
    )


def brute_force_partial(
    f: DiscreteMeasure, g: DiscreteMeasure, m: float, cost: CostModel
) -> TransportPlan:
    """Independent exact oracle: the augmented balanced problem solved as an
    explicit linear program.  Test use only; refuses supports above 6x6."""
    if len(f) > BRUTE_FORCE_CAP or len(g) > BRUTE_FORCE_CAP:
        raise DomainError(
            f"brute force capped at {BRUTE_FORCE_CAP}x{BRUTE_FORCE_CAP} "
            f"supports, got {len(f)}x{len(g)}"
        )
    m = _validated_mass(f, g, m)
    C = _cost_matrix(f, g, cost)
    Caug, a, b = _augmented(C, f, g, m)
    ns, nt = Caug.shape
    nv = ns * nt
    A_eq = np.zeros((ns + nt, nv))
    for i in range(ns):
        A_eq[i, i * nt:(i + 1) * nt] = 1.0
    for j in range(nt):
        A_eq[ns + j, j::nt] = 1.0
    bounds = [(0.0, None)] * nv
    bounds[(ns - 1) * nt + (nt - 1)] = (0.0, 0.0)  # dummy-dummy excluded
    res = linprog(
        Caug.ravel(),
        A_eq=A_eq,
        b_eq=np.concatenate([a, b]),
        bounds=bounds,
        method="highs",
    )
    if not res.success:
        raise PotlabError(f"oracle LP failed: {res.message}")
    X = res.x.reshape(ns, nt)
    duals = np.asarray(res.eqlin.marginals, dtype=float)
    return _build_plan(X, duals[:ns], duals[ns:], C, f, g, m)


def extract_map(plan: TransportPlan) -> list[ActivePair]:
    """One target per active source: the target receiving the largest mass
    from that source, ties broken by lowest target index."""
    best: dict[int, tuple[float, int]] = {}
    for i, j, w in plan.entries:
        cur = best.get(i)
        if cur is None or w > cur[0] or (w == cur[0] and j < cur[1]):
            best[i] = (w, j)
    return [ActivePair(i, best[i][1]) for i in sorted(best)]


def check_duality(plan: TransportPlan, cost: CostModel) -> float:
    """Worst complementary-slackness violation of the plan's potentials.

    On arcs with positive mass: |c - u - v|.  On every real arc:
    max(0, u + v - c).  Optimal plans return ~0.
    """
    C = _cost_matrix(plan.source, plan.target, cost)
    u, v = plan.dual_u, plan.dual_v
    slack = u[:, None] + v[None, :] - C
    worst = max(0.0, float(slack.max()))
    for i, j, w in plan.entries:
        worst = max(worst, abs(float(slack[i, j])))
    return worst


def transposed_cost(cost: CostModel) -> CostModel:
    """The cost with its arguments swapped (values only)."""
    return CostModel(
        cost.dimension,
        value=lambda x, y: cost.value(y, x),
        smoothness_order=1,
        separation_floor=cost.separation_floor,
        name=cost.name + "~",
    )


def exchange_symmetry_check(
    f: DiscreteMeasure,
    g: DiscreteMeasure,
    m: float,
    cost: CostModel,
    tol: float = 1e-9,
) -> bool:
    """True iff swapping the roles of f and g (with the transposed cost)
    reproduces the optimal objective."""
    fwd = solve_partial(f, g, m, cost)
    bwd = solve_partial(g, f, m, transposed_cost(cost))
    return abs(fwd.objective - bwd.objective) <= tol
