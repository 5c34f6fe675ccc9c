"""Fourth-order regularity tensor A_{ij,kl} and sampled estimation of the
orthogonal-direction lower bound c0.

With C the mixed matrix c_{i,j} and W = C^{-1} (first slot pairing a
y-index, second an x-index):

    A[i,j,k,l] = W[r,k] W[s,l] * (W[m,n] c_{ij,m} c_{n,rs} - c_{ij,rs})

summed over r, s, m, n.  The tensor is evaluated at a pair (x, y); the
momentum parameterization p is implicit through p = grad_x c(x, y).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import CostModel
from .errors import DegenerateInputError, NonDegeneracyError

DET_TOL = 1e-10


@dataclass(frozen=True)
class MtwTensor:
    entries: np.ndarray  # (n, n, n, n)
    basepoint: tuple[np.ndarray, np.ndarray]

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def a3_admissible(self) -> bool:
        """There is no nonzero orthogonal direction pair in one dimension."""
        return self.dimension >= 2


@dataclass(frozen=True)
class A3Report:
    c0_estimate: float | None
    argmin: tuple | None  # (x, y, xi, eta)
    samples_checked: int

    @property
    def vacuous(self) -> bool:
        return self.samples_checked == 0

    def to_dict(self) -> dict:
        arg = None
        if self.argmin is not None:
            arg = {
                "x": list(self.argmin[0]),
                "y": list(self.argmin[1]),
                "xi": list(self.argmin[2]),
                "eta": list(self.argmin[3]),
            }
        return {
            "c0_estimate": self.c0_estimate,
            "argmin": arg,
            "samples_checked": self.samples_checked,
        }


def mtw_tensor(cost: CostModel, x, y) -> MtwTensor:
    """Evaluate the regularity tensor at the pair (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    C = cost.mixed_xy(x, y)
    det = np.linalg.det(C)
    if abs(det) <= DET_TOL:
        raise NonDegeneracyError(
            f"mixed matrix is singular at the basepoint (det = {det:.3e})"
        )
    W = np.linalg.inv(C)
    d3_xxy = cost.d3_xxy(x, y)  # c_{ij,m}
    d3_xyy = cost.d3_xyy(x, y)  # c_{n,rs}
    d4 = cost.d4_xxyy(x, y)  # c_{ij,rs}
    inner = np.einsum("mn,ijm,nrs->ijrs", W, d3_xxy, d3_xyy) - d4
    entries = np.einsum("rk,sl,ijrs->ijkl", W, W, inner)
    return MtwTensor(entries=entries, basepoint=(x, y))


def a3_form(tensor: MtwTensor, xi, eta) -> float:
    """Raw bilinear form A xi xi eta eta (not normalized)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return float(np.einsum("ijkl,i,j,k,l->", tensor.entries, xi, xi, eta, eta))


def _axis_pairs(n):
    eye = np.eye(n)
    for i in range(n):
        for j in range(n):
            if i != j:
                yield eye[i], eye[j]


def orthonormal_direction_pairs(n, count, rng):
    """Reproducible stream of orthonormal (xi, eta) pairs: Gaussian sphere
    samples with eta Gram-Schmidt orthogonalized against xi."""
    out = []
    while len(out) < count:
        xi = rng.standard_normal(n)
        nx = np.linalg.norm(xi)
        if nx < 1e-12:
            continue
        xi = xi / nx
        eta = rng.standard_normal(n)
        eta = eta - (eta @ xi) * xi
        ne = np.linalg.norm(eta)
        if ne < 1e-8:
            continue
        out.append((xi, eta / ne))
    return out


def a3_infimum(
    cost: CostModel,
    pairs,
    directions_per_pair: int,
    seed: int = 0,
) -> A3Report:
    """Minimize the normalized form over sampled basepoints and orthonormal
    direction pairs.

    The result is an upper bound on the true infimum: a sampled minimum can
    falsify A3 positivity but never certify it.  Direction streams are
    seeded per basepoint index, so adding basepoints or directions never
    increases the estimate.
    """
    pairs = list(pairs)
    if pairs and cost.dimension < 2:
        raise DegenerateInputError(
            "A3 needs dimension >= 2: no nonzero orthogonal pair in 1D"
        )
    best = None
    argmin = None
    checked = 0
    for k, (x, y) in enumerate(pairs):
        tensor = mtw_tensor(cost, x, y)
        rng = np.random.default_rng([seed, k])
        directions = list(_axis_pairs(cost.dimension))
        directions += orthonormal_direction_pairs(
            cost.dimension, directions_per_pair, rng
        )
        for xi, eta in directions:
            val = a3_form(tensor, xi, eta)
            checked += 1
            if best is None or val < best:
                best = val
                argmin = (
                    np.asarray(x, dtype=float),
                    np.asarray(y, dtype=float),
                    xi,
                    eta,
                )
    return A3Report(c0_estimate=best, argmin=argmin, samples_checked=checked)
