"""Probabilistic bounds on sample eigenvector angles and eigenvalues.

Every bound returns a probability clamped to ``[0, 1]``; pass ``clamp=False``
for the raw value (used to check exact ``1/m`` scaling).

The kurtosis factor of direction ``u_j`` is
``k_j = (E ||x x^T u_j||^2 - lambda_j^2) ** 0.5``; for a Gaussian it equals
``(lambda_j * (lambda_j + trace C)) ** 0.5``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .linalg import SpectralDecomposition
from .perturbation import DEFAULT_GAP_TOL, InadmissiblePairError
from .sampling import DistributionSpec, derive_seed, iter_sample_chunks

__all__ = [
    "KFACTOR_METHODS",
    "KurtosisFactor",
    "SubgaussianProfile",
    "angle_tail_bound",
    "condition_probability_lower",
    "eigenvalue_tail_bound",
    "k_factor",
    "k_factors",
    "pc_capture_bound",
    "pc_capture_support",
    "psi2_by_direction",
    "psi2_scalar",
    "psi2_vector",
    "samples_for_angle",
    "samples_for_eigenvalue",
    "subgaussian_angle_bound",
    "subgaussian_margin",
    "weighted_sum_bound",
]

KFACTOR_METHODS = ("closed-form-gaussian", "monte-carlo", "dataset")
_METHOD_ALIASES = {"closed": "closed-form-gaussian", "closed-form-gaussian": "closed-form-gaussian",
                   "mc": "monte-carlo", "monte-carlo": "monte-carlo", "dataset": "dataset"}
# relative slack when inverting a bound; absorbs rounding in (2k/(t gap))^2 / m
_ROUNDTRIP_RTOL = 1e-12
MIN_PSI2_SAMPLES = 1000
DEFAULT_P_MAX = 8
N_RANDOM_DIRECTIONS = 64


@dataclass(frozen=True)
class KurtosisFactor:
    j: int
    value: float
    method: str
    estimate_count: int = 0

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError("kurtosis factor must be non-negative")

    def __float__(self):
        return float(self.value)


def _kval(k) -> float:
    return float(k.value) if isinstance(k, KurtosisFactor) else float(k)


def k_factor(spec: DistributionSpec, decomp: SpectralDecomposition | None, j: int,
             method: str = "closed", n_mc: int = 100_000, seed: int = 0) -> KurtosisFactor:
    """Kurtosis factor of eigen-direction ``j`` (0-based) of the true covariance.

    ``closed`` uses the Gaussian closed form; ``mc`` averages over ``n_mc``
    fresh draws from ``spec``; ``dataset`` averages over the rows of an
    empirical spec after centring them. The Monte Carlo estimate of ``k_j^2``
    is clamped at zero.
    """
    method = _METHOD_ALIASES.get(method, method)
    if method not in KFACTOR_METHODS:
        raise ValueError(f"unknown k-factor method {method!r}")
    if decomp is None:
        decomp = spec.decomposition()
    if not 0 <= j < decomp.n:
        raise IndexError(f"direction index {j} out of range for n={decomp.n}")

    if method == "closed-form-gaussian":
        if spec.kind != "gaussian":
            raise ValueError(f"closed-form k-factor only exists for gaussian specs, not {spec.kind}")
        lam = spec.spectrum
        return KurtosisFactor(j, math.sqrt(lam[j] * (lam[j] + float(np.sum(lam)))), method)

    u = decomp.eigenvectors[:, j]
    lam_j = float(decomp.eigenvalues[j])
    if method == "dataset":
        if spec.kind != "empirical":
            raise ValueError("dataset k-factor needs an empirical spec")
        X = spec.data - spec.data.mean(axis=0)
        second = float(np.mean((X @ u) ** 2 * np.einsum("pi,pi->p", X, X)))
        count = X.shape[0]
    else:
        if n_mc < 1:
            raise ValueError("n_mc must be positive")
        total = 0.0
        for X in iter_sample_chunks(spec, n_mc, seed):
            total += float(np.sum((X @ u) ** 2 * np.einsum("pi,pi->p", X, X)))
        second = total / n_mc
        count = n_mc
    return KurtosisFactor(j, math.sqrt(max(second - lam_j ** 2, 0.0)), method, count)


def k_factors(spec: DistributionSpec, decomp: SpectralDecomposition | None = None, method: str | None = None,
              n_mc: int = 100_000, seed: int = 0) -> list[KurtosisFactor]:
    """Kurtosis factors for every direction, picking a sensible default method."""
    if decomp is None:
        decomp = spec.decomposition()
    if method is None:
        method = {"gaussian": "closed", "empirical": "dataset"}.get(spec.kind, "mc")
    return [k_factor(spec, decomp, j, method, n_mc, seed) for j in range(decomp.n)]


def _clamp(p: float, clamp: bool) -> float:
    return min(1.0, max(0.0, p)) if clamp else p


def _gap(a: float, b: float, gap_tol: float) -> float:
    g = abs(a - b)
    if g <= gap_tol:
        raise InadmissiblePairError(f"eigenvalue gap {g:.3e} <= gap_tol")
    return g


def _check_tm(t: float, m: float) -> None:
    if not t > 0:
        raise ValueError("t must be positive")
    if not m >= 1:
        raise ValueError("m must be at least 1")


def angle_tail_bound(t: float, m: float, k_j, lam_i: float, lam_j: float, *,
                     gap_tol: float = DEFAULT_GAP_TOL, clamp: bool = True) -> float:
    """Bound on ``P(|<hat u_i, u_j>| >= t)`` for distributions with finite second moment."""
    _check_tm(t, m)
    gap = _gap(lam_i, lam_j, gap_tol)
    return _clamp((2.0 * _kval(k_j) / (t * gap)) ** 2 / m, clamp)


def weighted_sum_bound(weights: Mapping[tuple[int, int], float], k: Sequence, spectrum: Sequence[float],
                       m: float, t: float, *, gap_tol: float = DEFAULT_GAP_TOL, clamp: bool = True) -> float:
    """Bound on ``P(sum_{i != j} w_ij <hat u_i, u_j>^2 > t)``."""
    _check_tm(t, m)
    lam = np.asarray(spectrum, dtype=np.float64)
    total = 0.0
    for (i, j), w in sorted(weights.items()):
        if w < 0:
            raise ValueError(f"weight for ({i}, {j}) is negative")
        if i == j or w == 0:
            continue
        gap = _gap(lam[i], lam[j], gap_tol)
        total += 4.0 * w * _kval(k[j]) ** 2 / (m * t * gap ** 2)
    return _clamp(total, clamp)


def eigenvalue_tail_bound(t: float, m: float, k_i, lam_i: float, *, clamp: bool = True) -> float:
    """Bound on ``P(|hat lambda_i - lambda_i| / lambda_i >= t)``."""
    _check_tm(t, m)
    if not lam_i > 0:
        raise ValueError("lambda_i must be positive")
    return _clamp((_kval(k_i) / (lam_i * t)) ** 2 / m, clamp)


def condition_probability_lower(m: float, k_i, lam_i: float, lam_j: float, *,
                                gap_tol: float = DEFAULT_GAP_TOL) -> float:
    """Lower bound on the probability that the sign condition holds for (i, j).

    Obtained from :func:`eigenvalue_tail_bound` at ``t = |lambda_i - lambda_j| / (2 lambda_i)``.
    """
    if not m >= 1:
        raise ValueError("m must be at least 1")
    gap = _gap(lam_i, lam_j, gap_tol)
    return max(0.0, 1.0 - 4.0 * _kval(k_i) ** 2 / (m * gap ** 2))


def psi2_scalar(x, p_max: int = DEFAULT_P_MAX) -> float:
    """Empirical ``sup_{1 <= p <= p_max} p^(-1/2) (mean |X|^p)^(1/p)``."""
    a = np.abs(np.asarray(x, dtype=np.float64).ravel())
    if a.size == 0:
        raise ValueError("psi2 estimate needs samples")
    if a.size < MIN_PSI2_SAMPLES:
        raise ValueError(f"psi2 estimate needs at least {MIN_PSI2_SAMPLES} samples, got {a.size}")
    if p_max < 2:
        raise ValueError("p_max must be at least 2")
    return float(psi2_by_direction(a[:, None], np.ones((1, 1)), p_max)[0])


def psi2_by_direction(X, directions, p_max: int = DEFAULT_P_MAX) -> np.ndarray:
    """Scalar psi2 estimate of ``<x, y>`` for each column ``y`` of ``directions``."""
    proj = np.abs(np.asarray(X, dtype=np.float64) @ np.asarray(directions, dtype=np.float64))
    scale = proj.max(axis=0)
    out = np.zeros(proj.shape[1])
    nz = scale > 0
    z = proj[:, nz] / scale[nz]
    best = np.zeros(z.shape[1])
    for p in range(1, p_max + 1):
        best = np.maximum(best, p ** -0.5 * np.mean(z ** p, axis=0) ** (1.0 / p))
    out[nz] = best * scale[nz]
    return out


def _random_directions(n: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([derive_seed(seed, 0xD1EC)])))
    Y = rng.standard_normal((n, count))
    return Y / np.linalg.norm(Y, axis=0)


def psi2_vector(spec: DistributionSpec, decomp: SpectralDecomposition | None = None, n_mc: int = 100_000,
                seed: int = 0, p_max: int = DEFAULT_P_MAX, return_all: bool = False):
    """Lower estimate of ``sup_y psi2(<x, y>)`` over eigen-directions plus random unit directions.

    With ``return_all`` the per-direction values are returned too (first ``n``
    entries are the eigenvectors in order).
    """
    if decomp is None:
        decomp = spec.decomposition()
    if n_mc < MIN_PSI2_SAMPLES:
        raise ValueError(f"psi2 estimate needs at least {MIN_PSI2_SAMPLES} samples")
    if spec.kind == "empirical" and n_mc == spec.data.shape[0]:
        X = spec.data
    else:
        X = np.concatenate(list(iter_sample_chunks(spec, n_mc, seed)))
    Y = np.hstack([decomp.eigenvectors, _random_directions(decomp.n, N_RANDOM_DIRECTIONS, seed)])
    values = psi2_by_direction(X, Y, p_max)
    best = float(values.max())
    return (best, values) if return_all else best


@dataclass(frozen=True)
class SubgaussianProfile:
    """Inputs of the bounded sub-gaussian bound.

    ``c_abs`` stands in for an unspecified absolute constant, so bound values
    computed from it are meaningful only up to that constant.
    """

    psi2: float
    radius: float
    c_abs: float = 1.0

    def __post_init__(self):
        if not self.psi2 > 0:
            raise ValueError("psi2 must be positive")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.c_abs > 0:
            raise ValueError("c_abs must be positive")

    @classmethod
    def from_spec(cls, spec: DistributionSpec, decomp: SpectralDecomposition | None = None, *,
                  n_mc: int = 100_000, seed: int = 0, p_max: int = DEFAULT_P_MAX, c_abs: float = 1.0):
        from .sampling import ball_radius

        r = ball_radius(spec)
        if r is None:
            raise ValueError(f"{spec.kind} distribution is unbounded; the ball bound does not apply")
        if decomp is None:
            decomp = spec.decomposition()
        if r ** 2 < decomp.eigenvalues[0] * (1 - 1e-12):
            raise ValueError("ball radius squared is below the top eigenvalue")
        return cls(psi2_vector(spec, decomp, n_mc, seed, p_max), r, c_abs)


def subgaussian_margin(t: float, psi2: float, radius: float, lam_i: float, lam_j: float) -> float:
    """Deviation margin ``Phi_ij(t)`` of the ball bound."""
    if not lam_j > 0:
        raise ValueError("lambda_j must be positive")
    if radius ** 2 <= lam_j:
        raise ValueError(f"radius^2 = {radius ** 2:.6g} must exceed lambda_j = {lam_j:.6g}")
    return (abs(lam_i - lam_j) * t - 2.0 * lam_j) / (2.0 * math.sqrt(radius ** 2 / lam_j - 1.0)) - 2.0 * psi2


def subgaussian_angle_bound(t: float, m: float, profile: SubgaussianProfile, lam_i: float, lam_j: float, *,
                            gap_tol: float = DEFAULT_GAP_TOL, clamp: bool = True) -> float:
    """Bound on ``P(|<hat u_i, u_j>| >= t)`` for distributions supported in a ball.

    Vacuous (returns 1) when the margin is not positive.
    """
    _check_tm(t, m)
    _gap(lam_i, lam_j, gap_tol)
    phi = subgaussian_margin(t, profile.psi2, profile.radius, lam_i, lam_j)
    if phi <= 0:
        return 1.0
    return _clamp(math.exp(1.0 - profile.c_abs * m * phi ** 2 / (lam_j * profile.psi2 ** 2)), clamp)


def pc_capture_support(i: int, ell: int, rank: int) -> list[int]:
    """Indices outside the window ``[i - ell, i + ell]`` but below ``rank``."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    return [j for j in range(rank) if j < i - ell or j > i + ell]


def pc_capture_bound(i: int, ell: int, t: float, spectrum: Sequence[float], k: Sequence, m: float,
                     rank: int | None = None, *, gap_tol: float = DEFAULT_GAP_TOL, clamp: bool = True) -> float:
    """Bound on ``P(sum_{|j - i| <= ell} <hat u_i, u_j>^2 < 1 - t)``."""
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    if not m >= 1:
        raise ValueError("m must be at least 1")
    lam = np.asarray(spectrum, dtype=np.float64)
    rank = lam.size if rank is None else int(rank)
    total = 0.0
    for j in pc_capture_support(i, ell, rank):
        if abs(lam[i] - lam[j]) <= gap_tol:
            raise InadmissiblePairError(f"pair ({i}, {j}) inside the capture support has a zero eigenvalue gap")
        total += 4.0 * _kval(k[j]) ** 2 / (m * t * (lam[i] - lam[j]) ** 2)
    return _clamp(total, clamp)


def _invert(numerator: float, epsilon: float) -> int:
    """Smallest integer ``m >= 1`` with ``numerator / m <= epsilon`` (up to rounding)."""
    m = max(1, math.ceil(numerator / epsilon))
    while m > 1 and numerator / (m - 1) <= epsilon * (1 + _ROUNDTRIP_RTOL):
        m -= 1
    while numerator / m > epsilon * (1 + _ROUNDTRIP_RTOL):
        m += 1
    return m


def _check_positive(**kw) -> None:
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive")


def samples_for_angle(t: float, epsilon: float, k_j, gap: float) -> int:
    """Samples needed for the finite-second-moment angle bound to drop to ``epsilon``."""
    _check_positive(t=t, epsilon=epsilon, k_j=_kval(k_j), gap=gap)
    if epsilon > 1:
        raise ValueError("epsilon must not exceed 1")
    return _invert((2.0 * _kval(k_j) / (t * gap)) ** 2, epsilon)


def samples_for_eigenvalue(t: float, epsilon: float, k_i, lam_i: float) -> int:
    _check_positive(t=t, epsilon=epsilon, k_i=_kval(k_i), lam_i=lam_i)
    if epsilon > 1:
        raise ValueError("epsilon must not exceed 1")
    return _invert((_kval(k_i) / (lam_i * t)) ** 2, epsilon)
