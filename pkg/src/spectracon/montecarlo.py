"""Seeded Monte Carlo harness that checks every bound against simulated draws.

Each trial ``(m, tau)`` draws its own sample set with seed
``derive_seed(config.seed, m, tau)``, so records do not depend on execution
order or on the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .concentration import (
    SubgaussianProfile,
    angle_tail_bound,
    condition_probability_lower,
    eigenvalue_tail_bound,
    pc_capture_bound,
    subgaussian_angle_bound,
)
from .linalg import JacobiConvergenceError, SpectralDecomposition, eig_symmetric
from .perturbation import DEFAULT_GAP_TOL, InadmissiblePairError
from .sampling import DistributionSpec, SampleSet, derive_seed, draw, sample_covariance

__all__ = [
    "MAX_FAILURE_FRACTION",
    "SLACK_SIGMAS",
    "AngleCell",
    "BoundReport",
    "CaptureCell",
    "EigenvalueCell",
    "ExperimentConfig",
    "ExperimentError",
    "LocalizationCurve",
    "TrialRecord",
    "Verdict",
    "run_experiment",
    "summarize",
    "verify_dominance",
]

MAX_FAILURE_FRACTION = 0.05
SLACK_SIGMAS = 3.0


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid of a Monte Carlo run. Indices are 0-based; ``i_indices=None`` means all."""

    spec: DistributionSpec
    m_grid: Sequence[int]
    trials: int
    seed: int = 0
    i_indices: Sequence[int] | None = None
    t_grid: Sequence[float] = ()
    ell_grid: Sequence[int] = (0,)
    exhaustive: bool = False
    threads: int = 1
    gap_tol: float = DEFAULT_GAP_TOL

    def __post_init__(self):
        object.__setattr__(self, "m_grid", tuple(int(m) for m in self.m_grid))
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        object.__setattr__(self, "ell_grid", tuple(sorted({int(e) for e in self.ell_grid})))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.m_grid or min(self.m_grid) < 2:
            raise ValueError("m_grid must be non-empty with entries >= 2")
        if not self.ell_grid or self.ell_grid[0] < 0:
            raise ValueError("ell_grid must be non-empty and non-negative")
        n = self.spec.n
        idx = tuple(range(n)) if self.i_indices is None else tuple(int(i) for i in self.i_indices)
        if not idx or any(not 0 <= i < n for i in idx):
            raise ValueError(f"i_indices must be non-empty and within [0, {n})")
        object.__setattr__(self, "i_indices", idx)
        if self.exhaustive:
            if self.spec.kind != "empirical":
                raise ValueError("exhaustive sampling needs an empirical spec")
            if set(self.m_grid) != {self.spec.data.shape[0]}:
                raise ValueError("exhaustive sampling needs m equal to the dataset size")


@dataclass(frozen=True, eq=False)
class TrialRecord:
    """Measurements from one sample set; row ``a`` refers to ``config.i_indices[a]``."""

    trial_index: int
    m: int
    inner_products: np.ndarray | None = None  # |<hat u_i, u_j>|, shape (k, n)
    sample_eigenvalues: np.ndarray | None = None  # hat lambda_i, shape (k,)
    eigenvalue_devs: np.ndarray | None = None  # |hat lambda_i - lambda_i|, shape (k,)
    condition_flags: np.ndarray | None = None  # shape (k, n); False on inadmissible pairs
    capture: np.ndarray | None = None  # shape (k, len(ell_grid))
    failed: bool = False
    error: str = ""


def _window_capture(sq: np.ndarray, i: int, ells: Sequence[int]) -> np.ndarray:
    # running sum over growing windows: non-negative increments keep it monotone in ell
    n = sq.shape[0]
    out = np.empty(len(ells))
    acc = float(sq[i])
    d = 0
    for a, ell in enumerate(ells):
        while d < ell:
            d += 1
            if i - d >= 0:
                acc += float(sq[i - d])
            if i + d < n:
                acc += float(sq[i + d])
        out[a] = acc
    return out


def _measure(config: ExperimentConfig, actual: SpectralDecomposition, m: int, tau: int) -> TrialRecord:
    spec = config.spec
    if config.exhaustive:
        S = SampleSet(np.array(spec.data))
    else:
        S = draw(spec, m, derive_seed(config.seed, m, tau))
    try:
        sample = eig_symmetric(sample_covariance(S))
    except JacobiConvergenceError as exc:
        return TrialRecord(tau, m, failed=True, error=str(exc))
    idx = list(config.i_indices)
    lam = actual.eigenvalues
    lam_hat = sample.eigenvalues[idx]
    signed = sample.eigenvectors[:, idx].T @ actual.eigenvectors
    inner = np.abs(signed)
    li = lam[idx][:, None]
    lj = lam[None, :]
    s = np.where(li > lj, 1.0, -1.0)
    admissible = np.abs(li - lj) > config.gap_tol
    cond = admissible & (s * 2.0 * lam_hat[:, None] > s * (li + lj))
    sq = signed ** 2
    capture = np.stack([_window_capture(sq[a], i, config.ell_grid) for a, i in enumerate(idx)])
    return TrialRecord(tau, m, inner, lam_hat, np.abs(lam_hat - lam[idx]), cond, capture)


def run_experiment(config: ExperimentConfig) -> list[TrialRecord]:
    """Run every trial of the grid; records come back ordered by ``(m, tau)``."""
    actual = config.spec.decomposition()
    tasks = [(m, tau) for m in sorted(set(config.m_grid)) for tau in range(config.trials)]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            records = list(pool.map(lambda mt: _measure(config, actual, *mt), tasks))
    else:
        records = [_measure(config, actual, m, tau) for m, tau in tasks]
    failed = sum(r.failed for r in records)
    if failed > MAX_FAILURE_FRACTION * len(records):
        raise ExperimentError(f"{failed} of {len(records)} trials failed (limit {MAX_FAILURE_FRACTION:.0%})")
    return records


def _stderr(p: float, count: int) -> float:
    return math.sqrt(p * (1.0 - p) / count) if count > 0 else 0.0


@dataclass(frozen=True)
class AngleCell:
    i: int
    j: int
    t: float
    m: int
    trials: int
    exceed: int
    cond_trials: int
    cond_exceed: int
    tchebichef: float
    subgaussian: float | None
    condition_lower: float

    @property
    def empirical(self) -> float:
        return self.exceed / self.trials

    @property
    def empirical_conditional(self) -> float:
        return self.cond_exceed / self.cond_trials if self.cond_trials else float("nan")

    @property
    def stderr_conditional(self) -> float:
        return _stderr(self.empirical_conditional, self.cond_trials) if self.cond_trials else 0.0

    @property
    def condition_frequency(self) -> float:
        return self.cond_trials / self.trials

    @property
    def condition_stderr(self) -> float:
        return _stderr(self.condition_frequency, self.trials)


@dataclass(frozen=True)
class EigenvalueCell:
    i: int
    t: float
    m: int
    trials: int
    exceed: int
    bound: float

    @property
    def empirical(self) -> float:
        return self.exceed / self.trials

    @property
    def stderr(self) -> float:
        return _stderr(self.empirical, self.trials)


@dataclass(frozen=True)
class CaptureCell:
    i: int
    ell: int
    t: float | None
    m: int
    trials: int
    mean_capture: float
    stderr_capture: float
    shortfall: int
    bound: float | None

    @property
    def empirical(self) -> float:
        return self.shortfall / self.trials

    @property
    def stderr(self) -> float:
        return _stderr(self.empirical, self.trials)


@dataclass(frozen=True)
class LocalizationCurve:
    i: int
    m: int
    mean_abs_inner: np.ndarray
    stderr: np.ndarray


@dataclass
class BoundReport:
    angle: list[AngleCell] = field(default_factory=list)
    eigenvalue: list[EigenvalueCell] = field(default_factory=list)
    capture: list[CaptureCell] = field(default_factory=list)
    localization: list[LocalizationCurve] = field(default_factory=list)
    eigenvalues: np.ndarray | None = None
    failed_trials: int = 0
    total_trials: int = 0


def _mean_stderr(x: np.ndarray):
    mean = x.mean(axis=0)
    if x.shape[0] > 1:
        return mean, x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])
    return mean, np.zeros_like(mean)


def summarize(records: Sequence[TrialRecord], config: ExperimentConfig, k: Sequence | None = None,
              profile: SubgaussianProfile | None = None, capture_t: Sequence[float] | None = None) -> BoundReport:
    """Aggregate trial records into exceedance frequencies next to the theoretical bounds.

    ``k`` holds the kurtosis factors of every direction; without it only the
    localization curves and capture means are produced. ``capture_t`` defaults
    to the entries of ``t_grid`` inside ``(0, 1)``. Capture cells whose
    support contains a zero eigenvalue gap get ``bound=None``.
    """
    if not records:
        raise ValueError("no trial records to summarise")
    ok = [r for r in sorted(records, key=lambda r: (r.m, r.trial_index)) if not r.failed]
    if not ok:
        raise ExperimentError("every trial failed")
    lam = config.spec.decomposition().eigenvalues
    n = lam.size
    idx = list(config.i_indices)
    report = BoundReport(eigenvalues=lam, failed_trials=len(records) - len(ok), total_trials=len(records))
    if capture_t is None:
        capture_t = [t for t in config.t_grid if 0 < t < 1]

    for m in sorted({r.m for r in ok}):
        rs = [r for r in ok if r.m == m]
        T = len(rs)
        inner = np.stack([r.inner_products for r in rs])
        devs = np.stack([r.eigenvalue_devs for r in rs])
        cond = np.stack([r.condition_flags for r in rs])
        cap = np.stack([r.capture for r in rs])
        for a, i in enumerate(idx):
            mean, se = _mean_stderr(inner[:, a, :])
            report.localization.append(LocalizationCurve(i, m, mean, se))
            for b, ell in enumerate(config.ell_grid):
                cmean, cse = _mean_stderr(cap[:, a, b])
                if not capture_t:
                    report.capture.append(CaptureCell(i, ell, None, m, T, float(cmean), float(cse), 0, None))
                for t in capture_t:
                    bound = None
                    if k is not None:
                        try:
                            bound = pc_capture_bound(i, ell, t, lam, k, m, gap_tol=config.gap_tol)
                        except InadmissiblePairError:
                            pass  # zero gap inside the support: no bound for this cell
                    short = int(np.sum(cap[:, a, b] < 1.0 - t))
                    report.capture.append(CaptureCell(i, ell, t, m, T, float(cmean), float(cse), short, bound))
            if k is None:
                continue
            for t in config.t_grid:
                if lam[i] > config.gap_tol:
                    exceed = int(np.sum(devs[:, a] / lam[i] >= t))
                    report.eigenvalue.append(
                        EigenvalueCell(i, t, m, T, exceed, eigenvalue_tail_bound(t, m, k[i], lam[i])))
            for j in range(n):
                if abs(lam[i] - lam[j]) <= config.gap_tol:
                    continue
                flags = cond[:, a, j]
                lower = condition_probability_lower(m, k[i], lam[i], lam[j], gap_tol=config.gap_tol)
                for t in config.t_grid:
                    hit = inner[:, a, j] >= t
                    sub = None
                    if profile is not None:
                        sub = subgaussian_angle_bound(t, m, profile, lam[i], lam[j], gap_tol=config.gap_tol)
                    report.angle.append(AngleCell(
                        i, j, t, m, T, int(hit.sum()), int(flags.sum()), int((hit & flags).sum()),
                        angle_tail_bound(t, m, k[j], lam[i], lam[j], gap_tol=config.gap_tol), sub, lower))
    return report


@dataclass(frozen=True)
class Verdict:
    bound: str
    coords: dict
    empirical: float
    theoretical: float
    stderr: float
    passed: bool

    def describe(self) -> str:
        where = ", ".join(f"{k}={v}" for k, v in self.coords.items())
        state = "PASS" if self.passed else "FAIL"
        return (f"{state} {self.bound} [{where}] empirical={self.empirical:.6g} "
                f"bound={self.theoretical:.6g} stderr={self.stderr:.3g}")


BOUND_KINDS = ("tchebichef", "subgaussian", "eigenvalue", "capture", "condition")


def _dominated(empirical: float, bound: float, stderr: float) -> bool:
    if math.isnan(empirical):
        return True
    return bool(empirical <= bound + SLACK_SIGMAS * stderr)


def verify_dominance(report: BoundReport, bounds: Sequence[str] = BOUND_KINDS,
                     bound_scale: float = 1.0) -> list[Verdict]:
    """One verdict per grid cell: PASS iff empirical <= bound + 3 stderr.

    Angle bounds are judged on the sign-condition-conditional frequencies.
    The condition check is reversed: PASS iff the condition frequency is at
    least its lower bound minus 3 stderr. ``bound_scale`` multiplies every
    theoretical value and exists to exercise the FAIL path.
    """
    unknown = set(bounds) - set(BOUND_KINDS)
    if unknown:
        raise ValueError(f"unknown bound kinds {sorted(unknown)}")
    out: list[Verdict] = []
    for c in report.angle:
        coords = {"i": c.i, "j": c.j, "t": c.t, "m": c.m}
        if "tchebichef" in bounds:
            b = c.tchebichef * bound_scale
            e, se = c.empirical_conditional, c.stderr_conditional
            out.append(Verdict("tchebichef", coords, e, b, se, _dominated(e, b, se)))
        if "subgaussian" in bounds and c.subgaussian is not None:
            b = c.subgaussian * bound_scale
            e, se = c.empirical_conditional, c.stderr_conditional
            out.append(Verdict("subgaussian", coords, e, b, se, _dominated(e, b, se)))
    if "condition" in bounds:
        seen = set()
        for c in report.angle:
            key = (c.i, c.j, c.m)
            if key in seen:
                continue
            seen.add(key)
            b = c.condition_lower * bound_scale
            e, se = c.condition_frequency, c.condition_stderr
            out.append(Verdict("condition", {"i": c.i, "j": c.j, "m": c.m}, e, b, se,
                               bool(e >= b - SLACK_SIGMAS * se)))
    if "eigenvalue" in bounds:
        for c in report.eigenvalue:
            b = c.bound * bound_scale
            out.append(Verdict("eigenvalue", {"i": c.i, "t": c.t, "m": c.m}, c.empirical, b, c.stderr,
                               _dominated(c.empirical, b, c.stderr)))
    if "capture" in bounds:
        for c in report.capture:
            if c.bound is None:
                continue
            b = c.bound * bound_scale
            out.append(Verdict("capture", {"i": c.i, "ell": c.ell, "t": c.t, "m": c.m}, c.empirical, b,
                               c.stderr, _dominated(c.empirical, b, c.stderr)))
    return out
