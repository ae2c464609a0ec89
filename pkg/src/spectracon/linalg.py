"""Dense real symmetric matrix algebra.

The eigensolver is a cyclic Jacobi method using the round-robin (tournament)
ordering, so each round applies ``n // 2`` disjoint plane rotations at once.
Results are sorted by descending eigenvalue and every eigenvector column is
sign-normalised so that its largest-magnitude entry is non-negative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "JacobiConvergenceError",
    "SpectralDecomposition",
    "as_symmetric",
    "eig_symmetric",
    "frobenius_norm",
    "matmul",
    "matvec",
    "max_abs",
    "reconstruct",
]

SYMMETRY_RTOL = 1e-12
DEFAULT_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 100


class JacobiConvergenceError(RuntimeError):
    """Raised when the Jacobi sweeps hit the cap before the off-diagonal vanished."""

    def __init__(self, residual: float, sweeps: int):
        self.residual = residual
        self.sweeps = sweeps
        super().__init__(
            f"Jacobi eigensolver did not converge after {sweeps} sweeps "
            f"(max off-diagonal magnitude {residual:.3e})"
        )


def as_symmetric(M) -> np.ndarray:
    """Validate ``M`` as a real symmetric matrix and return a float64 copy."""
    A = np.array(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A))))
    asym = float(np.max(np.abs(A - A.T)))
    if asym > SYMMETRY_RTOL * scale:
        raise ValueError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")
    return A


def _check_same(a: int, b: int, what: str) -> None:
    if a != b:
        raise ValueError(f"dimension mismatch in {what}: {a} != {b}")


def matvec(A, v) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if A.ndim != 2 or v.ndim != 1:
        raise ValueError("matvec expects a matrix and a vector")
    _check_same(A.shape[1], v.shape[0], "matvec")
    out = np.zeros(A.shape[0])
    for k in range(A.shape[1]):
        out += A[:, k] * v[k]
    return out


def matmul(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2:
        raise ValueError("matmul expects two matrices")
    _check_same(A.shape[1], B.shape[0], "matmul")
    out = np.zeros((A.shape[0], B.shape[1]))
    for k in range(A.shape[1]):
        out += np.outer(A[:, k], B[k, :])
    return out


def frobenius_norm(A) -> float:
    A = np.asarray(A, dtype=np.float64)
    scale = max_abs(A)
    if scale == 0.0:
        return 0.0
    # scaling first keeps the squares clear of overflow and underflow
    B = A / scale
    return scale * float(np.sqrt(np.sum(B * B)))


def max_abs(A) -> float:
    A = np.asarray(A, dtype=np.float64)
    return float(np.max(np.abs(A))) if A.size else 0.0


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs of a symmetric matrix.

    ``eigenvalues`` is sorted descending; column ``j`` of ``eigenvectors`` is
    the unit eigenvector belonging to ``eigenvalues[j]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def vector(self, j: int) -> np.ndarray:
        return self.eigenvectors[:, j]


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint (p, q) pair sets covering every p < q once per sweep."""
    size = n + (n % 2)
    players = list(range(size))
    rounds = []
    for _ in range(size - 1):
        ps, qs = [], []
        for a in range(size // 2):
            p, q = players[a], players[size - 1 - a]
            if p >= n or q >= n:
                continue
            if p > q:
                p, q = q, p
            ps.append(p)
            qs.append(q)
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


_SCHEDULES: dict[int, list[tuple[np.ndarray, np.ndarray]]] = {}


def _schedule(n: int):
    if n not in _SCHEDULES:
        _SCHEDULES[n] = _round_robin(n)
    return _SCHEDULES[n]


def _off_diagonal_max(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.max(np.abs(off))) if A.shape[0] > 1 else 0.0


def eig_symmetric(M, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS) -> SpectralDecomposition:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Converged when every off-diagonal magnitude is at most ``tol * ||M||_F``.
    Raises :class:`JacobiConvergenceError` after ``max_sweeps`` sweeps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = as_symmetric(M)
    n = A.shape[0]
    V = np.eye(n)
    threshold = tol * frobenius_norm(A)
    sweeps = 0
    while _off_diagonal_max(A) > threshold:
        if sweeps >= max_sweeps:
            raise JacobiConvergenceError(_off_diagonal_max(A), sweeps)
        for P, Q in _schedule(n):
            apq = A[P, Q]
            active = apq != 0.0
            if not np.any(active):
                continue
            P, Q, apq = P[active], Q[active], apq[active]
            with np.errstate(over="ignore"):
                # an infinite theta gives t = 0, i.e. no rotation
                theta = (A[Q, Q] - A[P, P]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # columns, then rows: A <- J^T A J with J[p,p]=J[q,q]=c, J[p,q]=s
            colp, colq = A[:, P].copy(), A[:, Q].copy()
            A[:, P] = c * colp - s * colq
            A[:, Q] = s * colp + c * colq
            rowp, rowq = A[P, :].copy(), A[Q, :].copy()
            A[P, :] = c[:, None] * rowp - s[:, None] * rowq
            A[Q, :] = s[:, None] * rowp + c[:, None] * rowq
            A[P, Q] = 0.0
            A[Q, P] = 0.0
            vp, vq = V[:, P].copy(), V[:, Q].copy()
            V[:, P] = c * vp - s * vq
            V[:, Q] = s * vp + c * vq
        sweeps += 1

    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    lead = np.argmax(np.abs(V), axis=0)
    flip = V[lead, np.arange(n)] < 0
    V[:, flip] *= -1.0
    return SpectralDecomposition(w, np.ascontiguousarray(V), sweeps)


def reconstruct(D: SpectralDecomposition) -> np.ndarray:
    """Return ``U diag(w) U^T``."""
    U = D.eigenvectors
    M = matmul(U * D.eigenvalues, U.T)
    return 0.5 * (M + M.T)
