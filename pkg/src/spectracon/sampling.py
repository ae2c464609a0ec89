"""Distributions with known covariance, seeded sampling and covariance estimation.

Seeding is counter based: samples are produced in fixed-size blocks and block
``b`` is generated by a Philox stream keyed on ``(seed, b)``. Sample ``p``
therefore depends only on ``(seed, p)`` and any prefix of a draw is stable
when ``m`` grows.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.utils.validation import check_array

from .linalg import SpectralDecomposition, eig_symmetric

__all__ = [
    "BLOCK_SIZE",
    "KINDS",
    "DistributionSpec",
    "SampleSet",
    "ball_radius",
    "derive_seed",
    "draw",
    "parse_spec",
    "read_samples_csv",
    "sample_covariance",
    "true_covariance",
]

KINDS = ("gaussian", "sphere-scaled", "rademacher-scaled", "empirical")
_ALIASES = {"gaussian": "gaussian", "normal": "gaussian", "sphere": "sphere-scaled",
            "sphere-scaled": "sphere-scaled", "rademacher": "rademacher-scaled",
            "rademacher-scaled": "rademacher-scaled"}
BLOCK_SIZE = 1024
_MASK64 = (1 << 64) - 1


def derive_seed(*parts: int) -> int:
    """Hash integers into a single 64-bit seed."""
    ss = np.random.SeedSequence([int(p) & _MASK64 for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & _MASK64, block])))


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """A generative model whose second moment is known exactly.

    For the synthetic kinds the covariance is ``U diag(spectrum) U^T``. The
    ``empirical`` kind resamples rows of ``data`` with replacement and treats
    the full-dataset covariance as the truth.
    """

    kind: str
    spectrum: np.ndarray | None = None
    basis: np.ndarray | None = None
    data: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "empirical":
            if self.data is None:
                raise ValueError("empirical distribution needs a data table")
            data = check_array(self.data, dtype=np.float64, ensure_min_samples=1)
            data.setflags(write=False)
            object.__setattr__(self, "data", data)
            return
        if self.spectrum is None:
            raise ValueError(f"{kind} distribution needs a spectrum")
        lam = np.array(self.spectrum, dtype=np.float64).ravel()
        if lam.size < 1 or np.any(~np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("spectrum entries must be finite and positive")
        if np.any(np.diff(lam) > 0):
            raise ValueError("spectrum must be sorted in descending order")
        lam.setflags(write=False)
        object.__setattr__(self, "spectrum", lam)
        if self.basis is not None:
            U = np.array(self.basis, dtype=np.float64)
            if U.shape != (lam.size, lam.size):
                raise ValueError(f"basis shape {U.shape} does not match spectrum length {lam.size}")
            if np.max(np.abs(U.T @ U - np.eye(lam.size))) > 1e-10:
                raise ValueError("basis is not orthonormal")
            U.setflags(write=False)
            object.__setattr__(self, "basis", U)

    @property
    def n(self) -> int:
        return self.data.shape[1] if self.kind == "empirical" else self.spectrum.size

    def decomposition(self) -> SpectralDecomposition:
        """Eigendecomposition of the true covariance (cached)."""
        if "decomp" not in self._cache:
            self._cache["decomp"] = eig_symmetric(true_covariance(self))
        return self._cache["decomp"]


@dataclass(frozen=True, eq=False)
class SampleSet:
    rows: np.ndarray

    def __post_init__(self):
        self.rows.setflags(write=False)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.rows.mean(axis=0)


def _generate_block(spec: DistributionSpec, seed: int, block: int) -> np.ndarray:
    rng = _block_rng(seed, block)
    if spec.kind == "empirical":
        return spec.data[rng.integers(0, spec.data.shape[0], BLOCK_SIZE)]
    n = spec.n
    root = np.sqrt(spec.spectrum)
    if spec.kind == "gaussian":
        z = rng.standard_normal((BLOCK_SIZE, n))
    elif spec.kind == "sphere-scaled":
        g = rng.standard_normal((BLOCK_SIZE, n))
        z = np.sqrt(n) * g / np.linalg.norm(g, axis=1, keepdims=True)
    else:
        z = 2.0 * rng.integers(0, 2, (BLOCK_SIZE, n)).astype(np.float64) - 1.0
    x = z * root
    if spec.basis is not None:
        x = np.einsum("pk,jk->pj", x, spec.basis)
    return x


def _rows(spec: DistributionSpec, seed: int, start: int, stop: int) -> np.ndarray:
    """Samples with indices ``start <= p < stop``."""
    out = np.empty((stop - start, spec.n))
    first, last = start // BLOCK_SIZE, (stop - 1) // BLOCK_SIZE
    pos = 0
    for b in range(first, last + 1):
        blk = _generate_block(spec, seed, b)
        lo = max(start - b * BLOCK_SIZE, 0)
        hi = min(stop - b * BLOCK_SIZE, BLOCK_SIZE)
        out[pos:pos + hi - lo] = blk[lo:hi]
        pos += hi - lo
    return out


def draw(spec: DistributionSpec, m: int, seed: int) -> SampleSet:
    """Draw ``m`` i.i.d. samples; a pure function of ``(spec, m, seed)``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return SampleSet(_rows(spec, seed, 0, int(m)))


def iter_sample_chunks(spec: DistributionSpec, m: int, seed: int, chunk: int = 64 * BLOCK_SIZE):
    """Yield the rows of ``draw(spec, m, seed)`` in consecutive chunks."""
    for start in range(0, m, chunk):
        yield _rows(spec, seed, start, min(start + chunk, m))


def sample_covariance(S: SampleSet | np.ndarray) -> np.ndarray:
    """Mean-centred covariance with divisor ``m`` (no Bessel correction)."""
    X = S.rows if isinstance(S, SampleSet) else np.asarray(S, dtype=np.float64)
    m = X.shape[0]
    if m < 2:
        raise ValueError("sample covariance needs at least 2 samples")
    Xc = X - X.mean(axis=0)
    C = np.einsum("pi,pj->ij", Xc, Xc) / m
    return 0.5 * (C + C.T)


def true_covariance(spec: DistributionSpec) -> np.ndarray:
    if spec.kind == "empirical":
        return sample_covariance(spec.data)
    lam = spec.spectrum
    if spec.basis is None:
        return np.diag(lam)
    U = spec.basis
    C = np.einsum("ik,k,jk->ij", U, lam, U)
    return 0.5 * (C + C.T)


def ball_radius(spec: DistributionSpec) -> float | None:
    """Radius of the smallest centred ball known to contain every sample."""
    if spec.kind == "gaussian":
        return None
    if spec.kind == "sphere-scaled":
        return float(np.sqrt(spec.n * spec.spectrum[0]))
    if spec.kind == "rademacher-scaled":
        return float(np.sqrt(np.sum(spec.spectrum)))
    return float(np.max(np.linalg.norm(spec.data, axis=1)))


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_samples_csv(path) -> np.ndarray:
    """Load a numeric CSV with one sample per row.

    A non-numeric first row is taken as a header and skipped. Ragged or
    non-numeric rows raise ``ValueError`` naming the line.
    """
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    with path.open(newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not tok.strip() for tok in rec):
                continue
            toks = [tok.strip() for tok in rec]
            if lineno == 1 and not all(_is_number(tok) for tok in toks):
                width = len(toks)
                continue
            if width is None:
                width = len(toks)
            elif len(toks) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} columns, found {len(toks)}")
            try:
                rows.append([float(tok) for tok in toks])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise ValueError(f"{path}: no numeric rows")
    return np.array(rows, dtype=np.float64)


def parse_spec(text: str) -> DistributionSpec:
    """Parse ``kind:l1,l2,...[@basis=<csv file>]``."""
    basis = None
    body = text.strip()
    if "@" in body:
        body, extra = body.split("@", 1)
        key, _, value = extra.partition("=")
        if key.strip() != "basis" or not value:
            raise ValueError(f"unrecognised spec option {extra!r}")
        basis = read_samples_csv(value.strip())
    kind, sep, values = body.partition(":")
    if not sep:
        raise ValueError(f"spec {text!r} must look like kind:l1,l2,...")
    kind = kind.strip().lower()
    if kind not in _ALIASES:
        raise ValueError(f"unknown distribution kind {kind!r}")
    try:
        lam = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"spec {text!r} has a non-numeric eigenvalue") from None
    return DistributionSpec(kind, spectrum=np.array(lam), basis=basis)
