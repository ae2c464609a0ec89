import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from spectracon.concentration import (
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
    subgaussian_margin,
    weighted_sum_bound,
)
from spectracon.perturbation import InadmissiblePairError
from spectracon.sampling import DistributionSpec

GAUSS = DistributionSpec("gaussian", [4.0, 2.0, 1.0, 0.5])
SQRT46 = math.sqrt(46)


class TestKFactor:
    def test_closed_form(self):
        k = k_factor(GAUSS, None, 0, "closed")
        assert k.value == pytest.approx(SQRT46, rel=1e-15)
        assert k.method == "closed-form-gaussian"
        lam = GAUSS.spectrum
        for kf in k_factors(GAUSS):
            assert kf.value ** 2 == pytest.approx(lam[kf.j] * (lam[kf.j] + lam.sum()), rel=1e-14)

    def test_monte_carlo_matches_closed_form(self):
        k = k_factor(GAUSS, None, 0, "mc", n_mc=1_000_000, seed=2)
        assert k.value == pytest.approx(SQRT46, rel=0.03)
        assert k.estimate_count == 1_000_000

    @pytest.mark.parametrize("lam", [(1.0, 1.0), (3.0, 2.0, 0.5)])
    def test_rademacher_is_exact(self, lam):
        spec = DistributionSpec("rademacher-scaled", lam)
        for j, lj in enumerate(lam):
            k = k_factor(spec, None, j, "mc", n_mc=1000, seed=5)
            assert k.value == pytest.approx(math.sqrt(lj * sum(lam) - lj ** 2), abs=1e-10)
        assert k_factor(DistributionSpec("rademacher-scaled", [1.0, 1.0]), None, 0, "mc", 1000).value == \
            pytest.approx(1.0, abs=1e-10)

    def test_dataset_method(self):
        rows = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 2.0], [0.0, -2.0]])
        spec = DistributionSpec("empirical", data=rows)
        # C = diag(2, 0.5) before sorting -> top direction is e2 with lambda 2
        k = k_factor(spec, None, 0, "dataset")
        second = np.mean((rows[:, 1] ** 2) * np.sum(rows ** 2, axis=1))
        assert k.value == pytest.approx(math.sqrt(second - 2.0 ** 2))

    def test_errors(self):
        with pytest.raises(ValueError):
            k_factor(DistributionSpec("rademacher-scaled", [1.0, 1.0]), None, 0, "closed")
        with pytest.raises(ValueError):
            k_factor(GAUSS, None, 0, "dataset")
        with pytest.raises(ValueError):
            KurtosisFactor(0, -1.0, "monte-carlo")


class TestTchebichefBounds:
    def test_angle_bound_value(self):
        assert angle_tail_bound(0.5, 1000, SQRT46, 3.0, 1.0) == pytest.approx(0.184)

    def test_angle_scaling(self):
        raw = angle_tail_bound(0.1, 10, SQRT46, 3.0, 1.0, clamp=False)
        assert angle_tail_bound(0.1, 20, SQRT46, 3.0, 1.0, clamp=False) == raw / 2
        assert angle_tail_bound(1e6, 10, SQRT46, 3.0, 1.0) < 1e-10
        assert angle_tail_bound(1e-3, 2, SQRT46, 3.0, 1.0) == 1.0

    def test_angle_zero_gap(self):
        with pytest.raises(InadmissiblePairError):
            angle_tail_bound(0.5, 100, 1.0, 2.0, 2.0)

    def test_weighted_sum(self):
        lam = [4.0, 1.0]
        k = [None, 2.0]
        assert weighted_sum_bound({}, k, lam, 100, 0.25) == 0
        assert weighted_sum_bound({(0, 1): 0.0}, k, lam, 100, 0.25) == 0
        assert weighted_sum_bound({(0, 1): 1.0}, k, lam, 100, 0.25) == pytest.approx(16 / 225)
        assert weighted_sum_bound({(0, 1): 1.0}, k, lam, 100, 0.25) == pytest.approx(4 * 4 / (100 * 0.25 * 9))
        with pytest.raises(InadmissiblePairError):
            weighted_sum_bound({(0, 1): 1.0}, [1.0, 1.0], [1.0, 1.0], 10, 0.5)

    def test_eigenvalue_bound(self):
        assert eigenvalue_tail_bound(1.0, 4, 3.0, 3.0) == pytest.approx(0.25)
        assert eigenvalue_tail_bound(0.5, 100, SQRT46, 4.0) == pytest.approx(0.115)
        raw = eigenvalue_tail_bound(0.1, 3, SQRT46, 4.0, clamp=False)
        assert eigenvalue_tail_bound(0.1, 6, SQRT46, 4.0, clamp=False) == raw / 2
        with pytest.raises(ValueError):
            eigenvalue_tail_bound(0.5, 10, 1.0, 0.0)

    def test_condition_lower(self):
        assert condition_probability_lower(4, 1.0, 3.0, 1.0) == pytest.approx(0.75)
        assert condition_probability_lower(1e12, 1.0, 3.0, 1.0) == pytest.approx(1.0)
        assert condition_probability_lower(1, 10.0, 3.0, 1.0) == 0.0
        with pytest.raises(InadmissiblePairError):
            condition_probability_lower(10, 1.0, 1.0, 1.0)


def gaussian_psi2_oracle(p_max=8):
    best = 0.0
    for p in range(1, p_max + 1):
        moment, _ = integrate.quad(lambda x: abs(x) ** p * math.exp(-x * x / 2) / math.sqrt(2 * math.pi),
                                   -np.inf, np.inf)
        best = max(best, p ** -0.5 * moment ** (1 / p))
    return best


class TestPsi2:
    def test_deterministic_variables(self):
        assert psi2_scalar(np.ones(1000)) == pytest.approx(1.0)
        signs = np.where(np.arange(2000) % 2 == 0, 1.0, -1.0)
        assert psi2_scalar(signs) == pytest.approx(1.0)

    def test_standard_normal_against_quadrature(self):
        oracle = gaussian_psi2_oracle()
        assert oracle == pytest.approx(math.sqrt(2 / math.pi), rel=1e-8)
        x = np.random.default_rng(0).standard_normal(1_000_000)
        assert psi2_scalar(x) == pytest.approx(oracle, rel=0.10)

    def test_errors(self):
        with pytest.raises(ValueError):
            psi2_scalar([])
        with pytest.raises(ValueError):
            psi2_scalar(np.ones(10))

    def test_homogeneity(self):
        x = np.random.default_rng(1).standard_normal(5000)
        assert psi2_scalar(3 * x) == pytest.approx(3 * psi2_scalar(x), rel=1e-12)

    def test_spherical_spec_directions_agree(self):
        spec = DistributionSpec("sphere-scaled", [1.0, 1.0, 1.0])
        _, values = psi2_vector(spec, None, n_mc=50_000, seed=3, return_all=True)
        assert values.max() / values.min() <= 1.10

    def test_gaussian_top_direction(self):
        spec = DistributionSpec("gaussian", [4.0, 1.0])
        best, values = psi2_vector(spec, None, n_mc=100_000, seed=3, return_all=True)
        assert values[0] / values[1] == pytest.approx(2.0, rel=0.10)
        assert best == pytest.approx(values[0], rel=0.02)

    def test_rademacher(self):
        _, values = psi2_vector(DistributionSpec("rademacher-scaled", [1.0, 1.0]), None, n_mc=2000,
                                return_all=True)
        np.testing.assert_allclose(values[:2], 1.0)


class TestSubgaussian:
    def test_vacuous_regime(self):
        prof = SubgaussianProfile(psi2=1.0, radius=math.sqrt(10.0))
        assert subgaussian_angle_bound(0.1, 100, prof, 10.0, 1.0) == 1.0

    def test_worked_example(self):
        prof = SubgaussianProfile(psi2=1.0, radius=math.sqrt(10.0))
        phi = subgaussian_margin(1.0, 1.0, math.sqrt(10.0), 10.0, 1.0)
        assert phi == pytest.approx((9 - 2) / (2 * 3) - 2)
        assert subgaussian_angle_bound(1.0, 100, prof, 10.0, 1.0) == 1.0

    def test_exponential_decay_in_m(self):
        prof = SubgaussianProfile(psi2=1.0, radius=math.sqrt(2.0), c_abs=1e-3)
        phi = subgaussian_margin(0.9, 1.0, math.sqrt(2.0), 100.0, 1.0)
        assert phi > 0
        b1 = subgaussian_angle_bound(0.9, 10, prof, 100.0, 1.0, clamp=False)
        b2 = subgaussian_angle_bound(0.9, 11, prof, 100.0, 1.0, clamp=False)
        assert b2 / b1 == pytest.approx(math.exp(-1e-3 * phi ** 2), rel=1e-12)

    def test_radius_below_lambda(self):
        with pytest.raises(ValueError):
            subgaussian_angle_bound(0.5, 10, SubgaussianProfile(1.0, 0.5), 3.0, 1.0)

    def test_profile_from_spec(self):
        prof = SubgaussianProfile.from_spec(DistributionSpec("rademacher-scaled", [9.0, 1.0, 1.0]), n_mc=5000)
        assert prof.radius == pytest.approx(math.sqrt(11))
        assert prof.psi2 == pytest.approx(3.0, rel=0.01)
        with pytest.raises(ValueError):
            SubgaussianProfile.from_spec(GAUSS)


class TestCapture:
    def test_full_window_is_zero(self):
        assert pc_capture_bound(0, 1, 0.5, [4.0, 1.0], [1.0, 2.0], 100, rank=2) == 0

    def test_worked_example(self):
        b = pc_capture_bound(0, 0, 0.5, [4.0, 1.0], [None, 2.0], 100, rank=2)
        assert b == pytest.approx(4 * 4 / (100 * 0.5 * 9))

    def test_monotone_in_ell(self):
        lam = [10 * 0.8 ** j for j in range(12)]
        k = [math.sqrt(l * (l + sum(lam))) for l in lam]
        for i in (0, 3, 6):
            vals = [pc_capture_bound(i, ell, 0.3, lam, k, 50, clamp=False) for ell in range(12)]
            assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_zero_gap_inside_support(self):
        with pytest.raises(InadmissiblePairError):
            pc_capture_bound(0, 0, 0.5, [2.0, 2.0, 1.0], [1, 1, 1], 10)
        assert pc_capture_bound(0, 1, 0.5, [2.0, 2.0, 1.0], [1, 1, 1], 10) > 0


class TestCalculators:
    def test_trivial(self):
        assert samples_for_angle(1.0, 1.0, 1.0, 2.0) == 1
        assert samples_for_eigenvalue(1.0, 0.25, 2.0, 2.0) == 4
        assert samples_for_eigenvalue(1.0, 1 / 16, 2.0, 2.0) == 16

    def test_reference_values(self):
        assert samples_for_angle(0.5, 0.1, SQRT46, 2.0) == 1840
        assert angle_tail_bound(0.5, 1840, SQRT46, 3.0, 1.0) == pytest.approx(0.1, rel=1e-12)
        assert angle_tail_bound(0.5, 1839, SQRT46, 3.0, 1.0) > 0.1
        assert samples_for_eigenvalue(0.5, 0.1, SQRT46, 4.0) == 115
        assert eigenvalue_tail_bound(0.5, 114, SQRT46, 4.0) > 0.1

    def test_halving_t_quadruples(self):
        m1 = samples_for_angle(0.4, 0.1, 1.0, 1.0)
        assert samples_for_angle(0.2, 0.1, 1.0, 1.0) == 4 * m1

    def test_errors(self):
        with pytest.raises(ValueError):
            samples_for_angle(0.0, 0.1, 1.0, 1.0)
        with pytest.raises(ValueError):
            samples_for_eigenvalue(0.5, -0.1, 1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(t=st.floats(1e-3, 10), m=st.integers(1, 10 ** 6), k=st.floats(1e-3, 1e3),
       li=st.floats(0.01, 100), lj=st.floats(0.01, 100))
def test_bounds_are_probabilities_and_monotone(t, m, k, li, lj):
    if abs(li - lj) <= 1e-6:
        return
    b = angle_tail_bound(t, m, k, li, lj)
    assert 0 <= b <= 1
    assert angle_tail_bound(t * 1.5, m, k, li, lj) <= b
    assert angle_tail_bound(t, m + 1, k, li, lj) <= b
    e = eigenvalue_tail_bound(t, m, k, li)
    assert 0 <= e <= 1
    assert eigenvalue_tail_bound(t, 2 * m, k, li, clamp=False) == pytest.approx(
        eigenvalue_tail_bound(t, m, k, li, clamp=False) / 2, rel=1e-15)
    assert 0 <= condition_probability_lower(m, k, li, lj) <= 1


@settings(max_examples=150, deadline=None)
@given(t=st.floats(1e-2, 10), eps=st.floats(1e-4, 1.0), k=st.floats(1e-2, 1e2), gap=st.floats(1e-2, 1e2))
def test_calculator_round_trip(t, eps, k, gap):
    m = samples_for_angle(t, eps, k, gap)
    raw = lambda mm: angle_tail_bound(t, mm, k, gap + 1.0, 1.0, clamp=False)
    assert raw(m) <= eps * (1 + 1e-12)
    if m >= 2:
        assert raw(m - 1) > eps
    m = samples_for_eigenvalue(t, eps, k, gap)
    raw = lambda mm: eigenvalue_tail_bound(t, mm, k, gap, clamp=False)
    assert raw(m) <= eps * (1 + 1e-12)
    if m >= 2:
        assert raw(m - 1) > eps
