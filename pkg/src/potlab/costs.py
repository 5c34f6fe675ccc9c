"""Cost-function abstraction: values, derivatives up to order 4, and the
scalar constants (b0, b1, c2) that parameterize the geometric predicates.

Derivative naming convention: indices before the comma differentiate in x,
indices after the comma differentiate in y.  So ``mixed_xy`` is the n x n
matrix c_{i,j}, ``d3_xxy`` is c_{ij,m}, ``d3_xyy`` is c_{n,rs} and
``d4_xxyy`` is c_{ij,rs}.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapabilityError,
    DegenerateInputError,
    DimensionMismatchError,
    DomainError,
)

# Finite-difference defaults.  Fourth-order stencils are rounding-sensitive:
# with steps much below ~3e-2 the cancellation noise of an exact polynomial
# already exceeds 1e-8 after division by h^4, so orders 3-4 use a coarser
# step than orders 1-2.
FD_STEP_LOW = 1e-4
# third/fourth-order stencils return the half-step value of the Richardson
# cross-check, so the effective step is FD_STEP_HIGH / 2; smaller steps let
# rounding noise (eps / h^4) dominate the 1e-8 scale these tensors are
# compared at
FD_STEP_HIGH = 1e-1
RICHARDSON_REL_TOL = 1e-3


class DerivativeQualityWarning(UserWarning):
    """Richardson cross-check of a finite-difference stencil disagreed."""


class DegenerateGradientWarning(UserWarning):
    """A sampled gradient norm fell below tolerance (b1 may vanish)."""


@dataclass(frozen=True)
class DomainSample:
    """Finite sample of a source or target domain."""

    points: np.ndarray  # (k, n)
    label: str = "source"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise DomainError("domain sample must be non-empty")
        if not np.all(np.isfinite(pts)):
            raise DomainError("domain sample contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)


@dataclass(frozen=True)
class CostConstants:
    """Sampled analogues of the constants b0, b1 and c2 = sup |D^2 c|."""

    b0: float
    b1: float
    c2: float
    sample_sizes: tuple[int, int] = (0, 0)


class CostModel:
    """Evaluable cost with derivatives up to ``smoothness_order``.

    Analytic derivative callables may be supplied; anything missing is
    filled in by central finite differences on ``value`` with a Richardson
    cross-check at half step.
    """

    def __init__(
        self,
        dimension,
        value,
        smoothness_order=4,
        grad_x=None,
        grad_y=None,
        hess_xx=None,
        mixed_xy=None,
        d3_xxy=None,
        d3_xyy=None,
        d4_xxyy=None,
        fd_step_low=FD_STEP_LOW,
        fd_step_high=FD_STEP_HIGH,
        separation_floor=0.0,
        name="custom",
    ):
        if smoothness_order not in (1, 2, 4):
            raise DomainError("smoothness_order must be one of 1, 2, 4")
        self.dimension = int(dimension)
        self.smoothness_order = int(smoothness_order)
        self.name = name
        self.fd_step_low = float(fd_step_low)
        self.fd_step_high = float(fd_step_high)
        self.separation_floor = float(separation_floor)
        self._value = value
        self._grad_x = grad_x
        self._grad_y = grad_y
        self._hess_xx = hess_xx
        self._mixed_xy = mixed_xy
        self._d3_xxy = d3_xxy
        self._d3_xyy = d3_xyy
        self._d4_xxyy = d4_xxyy

    # -- basic evaluation -------------------------------------------------

    def _check_pair(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dimension,) or y.shape != (self.dimension,):
            raise DimensionMismatchError(
                f"expected points of dimension {self.dimension}, "
                f"got shapes {x.shape} and {y.shape}"
            )
        if self.separation_floor > 0.0:
            if np.linalg.norm(x - y) < self.separation_floor:
                raise DomainError(
                    f"separation below floor {self.separation_floor} for "
                    f"singular cost {self.name!r}"
                )
        return x, y

    def value(self, x, y) -> float:
        x, y = self._check_pair(x, y)
        return float(self._value(x, y))

    def value_many(self, xs, y) -> np.ndarray:
        """Vectorized c(x_k, y) over rows of ``xs``; loop fallback."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return np.array([self.value(x, y) for x in xs])

    def _require_order(self, order):
        if self.smoothness_order < order:
            raise CapabilityError(
                f"cost {self.name!r} has smoothness order "
                f"{self.smoothness_order}, need {order}"
            )

    # -- finite differences ------------------------------------------------

    def _fd_mixed(self, x, y, x_idx, y_idx, step):
        """Central-difference mixed partial: differentiate ``value`` once in
        each listed coordinate (repeats allowed)."""

        def rec(xv, yv, pending):
            if not pending:
                return self._value(xv, yv)
            (which, i), rest = pending[0], pending[1:]
            # collapse a repeated coordinate into a second-difference stencil
            if rest and rest[0] == (which, i):
                base = np.array(xv) if which == "x" else np.array(yv)
                plus, minus = base.copy(), base.copy()
                plus[i] += step
                minus[i] -= step
                if which == "x":
                    f_p = rec(plus, yv, rest[1:])
                    f_0 = rec(base, yv, rest[1:])
                    f_m = rec(minus, yv, rest[1:])
                else:
                    f_p = rec(xv, plus, rest[1:])
                    f_0 = rec(xv, base, rest[1:])
                    f_m = rec(xv, minus, rest[1:])
                return (f_p - 2.0 * f_0 + f_m) / step**2
            base = np.array(xv) if which == "x" else np.array(yv)
            plus, minus = base.copy(), base.copy()
            plus[i] += step
            minus[i] -= step
            if which == "x":
                f_p = rec(plus, yv, rest)
                f_m = rec(minus, yv, rest)
            else:
                f_p = rec(xv, plus, rest)
                f_m = rec(xv, minus, rest)
            return (f_p - f_m) / (2.0 * step)

        pending = tuple(sorted(("x", i) for i in x_idx)) + tuple(
            sorted(("y", j) for j in y_idx)
        )
        return rec(x, y, pending)

    def _fd_tensor(self, x, y, nx, ny, step, cross_check=False):
        """Full derivative tensor with ``nx`` x-indices and ``ny`` y-indices."""
        n = self.dimension
        shape = (n,) * (nx + ny)
        out = np.empty(shape)
        for idx in np.ndindex(shape):
            x_idx, y_idx = idx[:nx], idx[nx:]
            out[idx] = self._fd_mixed(x, y, x_idx, y_idx, step)
        if cross_check:
            half = np.empty(shape)
            for idx in np.ndindex(shape):
                half[idx] = self._fd_mixed(x, y, idx[:nx], idx[nx:], step / 2)
            scale = max(np.abs(out).max(), np.abs(half).max(), 1.0)
            if np.abs(out - half).max() / scale > RICHARDSON_REL_TOL:
                warnings.warn(
                    f"finite-difference order-{nx + ny} stencil of "
                    f"{self.name!r} failed the half-step cross-check",
                    DerivativeQualityWarning,
                    stacklevel=3,
                )
            out = half
        return out

    # -- derivatives -------------------------------------------------------

    def grad_x(self, x, y) -> np.ndarray:
        self._require_order(1)
        x, y = self._check_pair(x, y)
        if self._grad_x is not None:
            return np.asarray(self._grad_x(x, y), dtype=float)
        return self._fd_tensor(x, y, 1, 0, self.fd_step_low)

    def grad_y(self, x, y) -> np.ndarray:
        self._require_order(1)
        x, y = self._check_pair(x, y)
        if self._grad_y is not None:
            return np.asarray(self._grad_y(x, y), dtype=float)
        return self._fd_tensor(x, y, 0, 1, self.fd_step_low)

    def hess_xx(self, x, y) -> np.ndarray:
        self._require_order(2)
        x, y = self._check_pair(x, y)
        if self._hess_xx is not None:
            return np.asarray(self._hess_xx(x, y), dtype=float)
        return self._fd_tensor(x, y, 2, 0, self.fd_step_low)

    def mixed_xy(self, x, y) -> np.ndarray:
        """The n x n matrix c_{i,j} = d^2 c / dx_i dy_j."""
        self._require_order(2)
        x, y = self._check_pair(x, y)
        if self._mixed_xy is not None:
            return np.asarray(self._mixed_xy(x, y), dtype=float)
        return self._fd_tensor(x, y, 1, 1, self.fd_step_low)

    def d3_xxy(self, x, y) -> np.ndarray:
        """c_{ij,m}: two x-derivatives, one y-derivative."""
        self._require_order(4)
        x, y = self._check_pair(x, y)
        if self._d3_xxy is not None:
            return np.asarray(self._d3_xxy(x, y), dtype=float)
        return self._fd_tensor(x, y, 2, 1, self.fd_step_high, cross_check=True)

    def d3_xyy(self, x, y) -> np.ndarray:
        """c_{n,rs}: one x-derivative, two y-derivatives."""
        self._require_order(4)
        x, y = self._check_pair(x, y)
        if self._d3_xyy is not None:
            return np.asarray(self._d3_xyy(x, y), dtype=float)
        return self._fd_tensor(x, y, 1, 2, self.fd_step_high, cross_check=True)

    def d4_xxyy(self, x, y) -> np.ndarray:
        """c_{ij,rs}: two x-derivatives, two y-derivatives."""
        self._require_order(4)
        x, y = self._check_pair(x, y)
        if self._d4_xxyy is not None:
            return np.asarray(self._d4_xxyy(x, y), dtype=float)
        return self._fd_tensor(x, y, 2, 2, self.fd_step_high, cross_check=True)

    def with_finite_differences_only(self) -> "CostModel":
        """Copy of this model that ignores analytic derivative callables."""
        return CostModel(
            self.dimension,
            self._value,
            smoothness_order=self.smoothness_order,
            fd_step_low=self.fd_step_low,
            fd_step_high=self.fd_step_high,
            separation_floor=self.separation_floor,
            name=self.name + "+fd",
        )


# ---------------------------------------------------------------------------
# Radial costs c(x, y) = h(|x - y|^2)
# ---------------------------------------------------------------------------


class RadialCost(CostModel):
    """Cost of the form c(x,y) = h(s), s = |x-y|^2, with analytic tensors.

    ``h_derivs`` maps s to (h, h', h'', h''', h'''').  Every x/y derivative
    tensor follows from the chain rule on u = x - y; each y-derivative flips
    the sign once.
    """

    def __init__(self, dimension, h_derivs, smoothness_order=4,
                 separation_floor=0.0, name="radial"):
        self._h = h_derivs
        super().__init__(
            dimension,
            value=self._radial_value,
            smoothness_order=smoothness_order,
            grad_x=lambda x, y: self._du(x, y, 1),
            grad_y=lambda x, y: -self._du(x, y, 1),
            hess_xx=lambda x, y: self._du(x, y, 2),
            mixed_xy=lambda x, y: -self._du(x, y, 2),
            d3_xxy=lambda x, y: -self._du(x, y, 3),
            d3_xyy=lambda x, y: self._du(x, y, 3),
            d4_xxyy=lambda x, y: self._du(x, y, 4),
            separation_floor=separation_floor,
            name=name,
        )

    def _radial_value(self, x, y):
        u = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return self._h(float(u @ u))[0]

    def value_many(self, xs, y):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        u = xs - np.asarray(y, dtype=float)
        s = np.einsum("ki,ki->k", u, u)
        if self.separation_floor > 0.0 and np.any(
            s < self.separation_floor**2
        ):
            raise DomainError(
                f"separation below floor {self.separation_floor} for "
                f"singular cost {self.name!r}"
            )
        return np.array([self._h(si)[0] for si in s])

    def _du(self, x, y, order):
        """Pure u-derivative tensor of h(|u|^2) of the given order."""
        u = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        s = float(u @ u)
        if self.separation_floor > 0.0 and np.sqrt(s) < self.separation_floor:
            raise DomainError(
                f"separation below floor {self.separation_floor} for "
                f"singular cost {self.name!r}"
            )
        _, h1, h2, h3, h4 = self._h(s)
        n = u.size
        eye = np.eye(n)
        if order == 1:
            return 2.0 * h1 * u
        if order == 2:
            return 2.0 * h1 * eye + 4.0 * h2 * np.outer(u, u)
        if order == 3:
            sym = (
                np.einsum("ij,k->ijk", eye, u)
                + np.einsum("ik,j->ijk", eye, u)
                + np.einsum("jk,i->ijk", eye, u)
            )
            return 4.0 * h2 * sym + 8.0 * h3 * np.einsum("i,j,k->ijk", u, u, u)
        if order == 4:
            dd = (
                np.einsum("ij,kl->ijkl", eye, eye)
                + np.einsum("ik,jl->ijkl", eye, eye)
                + np.einsum("il,jk->ijkl", eye, eye)
            )
            duu = (
                np.einsum("ij,k,l->ijkl", eye, u, u)
                + np.einsum("ik,j,l->ijkl", eye, u, u)
                + np.einsum("il,j,k->ijkl", eye, u, u)
                + np.einsum("jk,i,l->ijkl", eye, u, u)
                + np.einsum("jl,i,k->ijkl", eye, u, u)
                + np.einsum("kl,i,j->ijkl", eye, u, u)
            )
            uuuu = np.einsum("i,j,k,l->ijkl", u, u, u, u)
            return 4.0 * h2 * dd + 8.0 * h3 * duu + 16.0 * h4 * uuuu
        raise ValueError(order)


def _h_quadratic(s):
    return 0.5 * s, 0.5, 0.0, 0.0, 0.0


def _h_log(s):
    # -log|u| = -(1/2) log s
    return (
        -0.5 * np.log(s),
        -0.5 / s,
        0.5 / s**2,
        -1.0 / s**3,
        3.0 / s**4,
    )


def _h_sqrtplus(s):
    r = np.sqrt(1.0 + s)
    return r, 0.5 / r, -0.25 / r**3, 0.375 / r**5, -0.9375 / r**7


def quadratic_cost(dimension) -> CostModel:
    """c(x,y) = |x-y|^2 / 2; all third and fourth derivatives vanish."""
    return RadialCost(dimension, _h_quadratic, name="quadratic")


def log_cost(dimension, separation_floor=1e-6) -> CostModel:
    """c(x,y) = -log|x-y|; singular on the diagonal, A3-type tensor nonzero.

    Non-negative only for separations <= 1; the class-F sign condition is
    not claimed for this cost, it is shipped as the tensor-nonzero example.
    """
    return RadialCost(
        dimension, _h_log, separation_floor=separation_floor, name="log"
    )


def sqrtplus_cost(dimension) -> CostModel:
    """c(x,y) = sqrt(1 + |x-y|^2); bounded derivatives of all orders."""
    return RadialCost(dimension, _h_sqrtplus, name="sqrtplus")


_REGISTRY = {
    "quadratic": quadratic_cost,
    "log": log_cost,
    "sqrtplus": sqrtplus_cost,
}


def register_cost(name, factory):
    """Register a cost factory (dimension -> CostModel) under a string id."""
    _REGISTRY[name] = factory


def registered_costs():
    return sorted(_REGISTRY)


def get_cost(name, dimension) -> CostModel:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise DomainError(
            f"unknown cost id {name!r}; registered: {registered_costs()}"
        ) from None
    return factory(dimension)


# ---------------------------------------------------------------------------
# Sampled constants
# ---------------------------------------------------------------------------


def _check_samples(cost, omega, lam):
    if omega.dimension != lam.dimension or omega.dimension != cost.dimension:
        raise DimensionMismatchError(
            f"cost dimension {cost.dimension}, source dimension "
            f"{omega.dimension}, target dimension {lam.dimension}"
        )


def estimate_b0(cost: CostModel, omega: DomainSample, lam: DomainSample) -> float:
    """min over sampled pairs of c(x, y); discrete stand-in for the infimum
    of the cost over the product domain."""
    _check_samples(cost, omega, lam)
    best = np.inf
    for y in lam.points:
        best = min(best, float(np.min(cost.value_many(omega.points, y))))
    return best


def estimate_b1(
    cost: CostModel,
    omega: DomainSample,
    lam: DomainSample,
    warn_tol: float = 1e-12,
) -> float:
    """min over sampled pairs of |grad_x c(x, y)|.

    Warns when the minimum is ~0: positivity is only guaranteed for twisted
    costs on disjoint domains, and a vanishing value invalidates the cone
    and ball predicates downstream.
    """
    _check_samples(cost, omega, lam)
    best = np.inf
    for y in lam.points:
        for x in omega.points:
            best = min(best, float(np.linalg.norm(cost.grad_x(x, y))))
    if best <= warn_tol:
        warnings.warn(
            "sampled min |grad_x c| is ~0; overlapping supports or a "
            "non-twisted cost",
            DegenerateGradientWarning,
            stacklevel=2,
        )
    return best


def estimate_c2(cost: CostModel, omega: DomainSample, lam: DomainSample) -> float:
    """max over sampled pairs of the operator norm of the xx-Hessian."""
    _check_samples(cost, omega, lam)
    best = 0.0
    for y in lam.points:
        for x in omega.points:
            best = max(best, float(np.linalg.norm(cost.hess_xx(x, y), ord=2)))
    return best


def estimate_constants(
    cost: CostModel, omega: DomainSample, lam: DomainSample
) -> CostConstants:
    return CostConstants(
        b0=estimate_b0(cost, omega, lam),
        b1=estimate_b1(cost, omega, lam),
        c2=estimate_c2(cost, omega, lam),
        sample_sizes=(len(omega.points), len(lam.points)),
    )


def check_twist(cost: CostModel, x, lam: DomainSample, tol: float = 1e-9) -> bool:
    """Sampled necessary check of the left twist condition (A1): the map
    y -> grad_x c(x, y) must be injective on the target sample."""
    x = np.asarray(x, dtype=float)
    grads = np.array([cost.grad_x(x, y) for y in lam.points])
    k = len(grads)
    for i in range(k):
        d = np.linalg.norm(grads[i + 1:] - grads[i], axis=1)
        if d.size and d.min() < tol:
            return False
    return True


def check_nondegeneracy(cost: CostModel, x, y) -> float:
    """det of the mixed matrix c_{i,j}(x,y); the A2 condition asks that it
    stays away from zero.  The caller compares |det| to its own tolerance."""
    return float(np.linalg.det(cost.mixed_xy(x, y)))
