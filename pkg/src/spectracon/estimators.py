"""scikit-learn compatible wrappers around the covariance spectrum and k-factors."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .concentration import k_factor
from .linalg import eig_symmetric
from .perturbation import SpectrumPair
from .sampling import DistributionSpec, sample_covariance

__all__ = ["KFactorEstimator", "SampleCovarianceSpectrum"]


class SampleCovarianceSpectrum(TransformerMixin, BaseEstimator):
    """Eigendecomposition of the sample covariance (divisor ``m``).

    ``transform`` projects centred data onto the leading ``n_components``
    sample eigenvectors. Set ``reference_covariance`` to compare the fitted
    spectrum with a known covariance through :meth:`spectrum_pair`.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    covariance_ : ndarray of shape (n_features, n_features)
    eigenvalues_ : ndarray of shape (n_features,), sorted descending
    components_ : ndarray of shape (n_features, n_features), eigenvectors as columns
    """

    def __init__(self, n_components=None, tol=1e-12, reference_covariance=None):
        self.n_components = n_components
        self.tol = tol
        self.reference_covariance = reference_covariance

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0)
        self.covariance_ = sample_covariance(X)
        decomp = eig_symmetric(self.covariance_, tol=self.tol)
        self.decomposition_ = decomp
        self.eigenvalues_ = np.array(decomp.eigenvalues)
        self.components_ = np.array(decomp.eigenvectors)
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        k = self.n_features_in_ if self.n_components is None else int(self.n_components)
        return (X - self.mean_) @ self.components_[:, :k]

    def spectrum_pair(self) -> SpectrumPair:
        check_is_fitted(self, "covariance_")
        if self.reference_covariance is None:
            raise ValueError("reference_covariance was not set")
        return SpectrumPair.from_matrices(self.reference_covariance, self.covariance_)

    def inner_products(self) -> np.ndarray:
        """``|<hat u_i, u_j>|`` against the reference eigenvectors, shape (n, n)."""
        P = self.spectrum_pair()
        return np.abs(P.sample.eigenvectors.T @ P.actual.eigenvectors)


class KFactorEstimator(BaseEstimator):
    """Dataset estimate of the kurtosis factor of every covariance eigen-direction."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        spec = DistributionSpec("empirical", data=X)
        decomp = spec.decomposition()
        self.n_features_in_ = X.shape[1]
        self.eigenvalues_ = np.array(decomp.eigenvalues)
        self.k_factors_ = np.array([k_factor(spec, decomp, j, "dataset").value for j in range(decomp.n)])
        return self
