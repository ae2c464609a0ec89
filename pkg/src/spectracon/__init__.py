"""Non-asymptotic concentration bounds for sample covariance eigenvectors and eigenvalues."""

__version__ = "0.1.0"

from .concentration import (
    KurtosisFactor,
    SubgaussianProfile,
    angle_tail_bound,
    condition_probability_lower,
    eigenvalue_tail_bound,
    k_factor,
    k_factors,
    pc_capture_bound,
    psi2_scalar,
    psi2_vector,
    samples_for_angle,
    samples_for_eigenvalue,
    subgaussian_angle_bound,
    weighted_sum_bound,
)
from .estimators import KFactorEstimator, SampleCovarianceSpectrum
from .linalg import JacobiConvergenceError, SpectralDecomposition, eig_symmetric, reconstruct
from .montecarlo import ExperimentConfig, run_experiment, summarize, verify_dominance
from .perturbation import (
    SpectrumPair,
    angle_bound_refined,
    angle_bound_simple,
    condition_holds,
    coupling_residual,
    eigenvalue_deviation_bound,
    projection_norm_residual,
)
from .sampling import DistributionSpec, SampleSet, ball_radius, draw, parse_spec, sample_covariance, true_covariance
