"""Deterministic eigenvector-angle machinery for a perturbed symmetric matrix.

All indices are 0-based. Sample eigenpairs are matched to actual eigenpairs
by their rank in the descending order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SpectralDecomposition, as_symmetric, eig_symmetric

__all__ = [
    "DEFAULT_GAP_TOL",
    "HypothesisError",
    "InadmissiblePairError",
    "SpectrumPair",
    "angle_bound_refined",
    "angle_bound_simple",
    "condition_holds",
    "coupling_residual",
    "eigenvalue_deviation_bound",
    "projection_norm_residual",
]

DEFAULT_GAP_TOL = 1e-8


class InadmissiblePairError(ValueError):
    """The eigenvalues involved are too close for the bound to be defined."""


class HypothesisError(ValueError):
    """The sign condition required by the refined bound does not hold."""


@dataclass(frozen=True, eq=False)
class SpectrumPair:
    actual: SpectralDecomposition
    sample: SpectralDecomposition
    delta: np.ndarray
    gap_tol: float = DEFAULT_GAP_TOL

    def __post_init__(self):
        if self.actual.n != self.sample.n:
            raise ValueError("actual and sample decompositions differ in dimension")
        if self.delta.shape != (self.actual.n, self.actual.n):
            raise ValueError("delta has the wrong shape")
        self.delta.setflags(write=False)

    @classmethod
    def from_matrices(cls, C, C_hat, gap_tol: float = DEFAULT_GAP_TOL, actual: SpectralDecomposition | None = None):
        C = as_symmetric(C)
        C_hat = as_symmetric(C_hat)
        if C.shape != C_hat.shape:
            raise ValueError("matrices differ in dimension")
        actual = actual if actual is not None else eig_symmetric(C)
        return cls(actual, eig_symmetric(C_hat), C_hat - C, gap_tol)

    @property
    def n(self) -> int:
        return self.actual.n

    def admissible(self, i: int, j: int) -> bool:
        lam = self.actual.eigenvalues
        return abs(lam[i] - lam[j]) > self.gap_tol

    def inner(self, i: int, j: int) -> float:
        """Signed inner product between sample vector ``i`` and actual vector ``j``."""
        return float(self.sample.eigenvectors[:, i] @ self.actual.eigenvectors[:, j])

    def delta_norm(self, j: int) -> float:
        """``||dC u_j||_2``."""
        return float(np.linalg.norm(self.delta @ self.actual.eigenvectors[:, j]))


def coupling_residual(P: SpectrumPair, i: int, j: int) -> float:
    """Gap between both sides of the exact coupling identity for the pair (i, j)."""
    U = P.actual.eigenvectors
    u_hat = P.sample.eigenvectors[:, i]
    lhs = (P.sample.eigenvalues[i] - P.actual.eigenvalues[j]) * (u_hat @ U[:, j])
    coeffs = u_hat @ U
    couplings = U[:, j] @ P.delta @ U
    rhs = float(np.sum(coeffs * couplings))
    return abs(lhs - rhs)


def projection_norm_residual(P: SpectrumPair, j: int) -> float:
    U = P.actual.eigenvectors
    couplings = U[:, j] @ P.delta @ U
    return abs(float(np.sum(couplings ** 2)) - P.delta_norm(j) ** 2)


def _require_admissible(P: SpectrumPair, i: int, j: int) -> None:
    if not P.admissible(i, j):
        lam = P.actual.eigenvalues
        raise InadmissiblePairError(
            f"pair ({i}, {j}) has |lambda_i - lambda_j| = {abs(lam[i] - lam[j]):.3e} <= gap_tol"
        )


def condition_holds(P: SpectrumPair, i: int, j: int) -> bool:
    """Whether the sample eigenvalue ``i`` lies strictly past the midpoint of
    ``lambda_i`` and ``lambda_j`` on the side of ``lambda_i``."""
    _require_admissible(P, i, j)
    lam = P.actual.eigenvalues
    s = 1.0 if lam[i] > lam[j] else -1.0
    return bool(s * 2.0 * P.sample.eigenvalues[i] > s * (lam[i] + lam[j]))


def angle_bound_simple(P: SpectrumPair, i: int, j: int) -> float:
    """``||dC u_j|| / |hat_lambda_i - lambda_j|``."""
    gap = abs(P.sample.eigenvalues[i] - P.actual.eigenvalues[j])
    if gap <= P.gap_tol:
        raise InadmissiblePairError(f"|hat_lambda_{i} - lambda_{j}| = {gap:.3e} <= gap_tol")
    return P.delta_norm(j) / gap


def angle_bound_refined(P: SpectrumPair, i: int, j: int) -> float:
    """``2 ||dC u_j|| / |lambda_i - lambda_j|``; valid only under the sign condition."""
    if not condition_holds(P, i, j):
        raise HypothesisError(f"sign condition fails for pair ({i}, {j}); outside the bound's hypothesis")
    lam = P.actual.eigenvalues
    return 2.0 * P.delta_norm(j) / abs(lam[i] - lam[j])


def eigenvalue_deviation_bound(P: SpectrumPair, i: int) -> float:
    """``||dC u_i||``, the residual of ``u_i`` as an approximate eigenvector of ``C_hat``."""
    return P.delta_norm(i)
