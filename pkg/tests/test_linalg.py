import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectracon.linalg import (
    JacobiConvergenceError,
    as_symmetric,
    eig_symmetric,
    frobenius_norm,
    matmul,
    matvec,
    max_abs,
    reconstruct,
)


def random_symmetric(rng, n, low=-1.0, high=1.0):
    A = rng.uniform(low, high, (n, n))
    return np.triu(A) + np.triu(A, 1).T


def charpoly_roots(M, grid=20001, iters=200):
    """Eigenvalues as roots of det(xI - M), coefficients by Faddeev-LeVerrier,
    bracketed on a Gershgorin grid and refined by bisection."""
    n = M.shape[0]
    coeffs = [1.0]
    Mk = np.zeros_like(M)
    c = 1.0
    for k in range(1, n + 1):
        Mk = M @ Mk + c * np.eye(n)
        c = -np.trace(M @ Mk) / k
        coeffs.append(c)

    def p(x):
        acc = 0.0
        for a in coeffs:
            acc = acc * x + a
        return acc

    radius = np.max(np.sum(np.abs(M), axis=1)) + 1.0
    xs = np.linspace(-radius, radius, grid)
    vals = np.array([p(x) for x in xs])
    roots = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0:
            for _ in range(iters):
                mid = 0.5 * (a + b)
                fm = p(mid)
                if fa * fm <= 0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    return np.sort(roots)[::-1]


def test_identity():
    D = eig_symmetric(np.eye(3))
    np.testing.assert_array_equal(D.eigenvalues, [1, 1, 1])
    np.testing.assert_array_equal(D.eigenvectors, np.eye(3))


def test_two_by_two():
    D = eig_symmetric([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(D.eigenvalues, [3.0, 1.0], atol=1e-15)
    r = 1 / np.sqrt(2)
    np.testing.assert_allclose(D.eigenvectors[:, 0], [r, r], atol=1e-15)
    # tie in |entries|; lowest row index takes the non-negative sign
    np.testing.assert_allclose(D.eigenvectors[:, 1], [r, -r], atol=1e-15)
    np.testing.assert_allclose(reconstruct(D), [[2, 1], [1, 2]], atol=1e-10)


def test_matches_characteristic_polynomial_roots():
    rng = np.random.default_rng(5)
    M = random_symmetric(rng, 5)
    roots = charpoly_roots(M)
    assert roots.size == 5
    np.testing.assert_allclose(eig_symmetric(M).eigenvalues, roots, atol=1e-8)


def test_reconstruct_identity_and_random():
    np.testing.assert_allclose(reconstruct(eig_symmetric(np.eye(4))), np.eye(4))
    rng = np.random.default_rng(11)
    M = random_symmetric(rng, 10)
    D = eig_symmetric(M)
    assert frobenius_norm(reconstruct(D) - M) <= 1e-9 * max(1.0, frobenius_norm(M))


@pytest.mark.parametrize("n", [1, 2, 3, 7, 16, 30])
def test_invariants_random(n):
    rng = np.random.default_rng(n)
    M = random_symmetric(rng, n, -5, 5)
    D = eig_symmetric(M)
    U = D.eigenvectors
    assert np.all(np.diff(D.eigenvalues) <= 0)
    assert max_abs(U.T @ U - np.eye(n)) <= 1e-10
    assert abs(D.eigenvalues.sum() - np.trace(M)) <= 1e-9 * max(1, abs(np.trace(M)))
    lead = np.argmax(np.abs(U), axis=0)
    assert np.all(U[lead, np.arange(n)] >= 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_round_trip_property(n, seed, scale):
    M = scale * random_symmetric(np.random.default_rng(seed), n)
    D = eig_symmetric(M)
    assert frobenius_norm(reconstruct(D) - M) <= 1e-9 * max(1.0, frobenius_norm(M))


def test_degenerate_eigenspace_is_orthonormal():
    Q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((4, 4)))
    M = Q @ np.diag([2.0, 2.0, 2.0, -1.0]) @ Q.T
    M = 0.5 * (M + M.T)
    D = eig_symmetric(M)
    np.testing.assert_allclose(D.eigenvalues, [2, 2, 2, -1], atol=1e-12)
    np.testing.assert_allclose(D.eigenvectors.T @ D.eigenvectors, np.eye(4), atol=1e-12)


def test_deterministic_bits():
    M = random_symmetric(np.random.default_rng(9), 12)
    a, b = eig_symmetric(M), eig_symmetric(M.copy())
    assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
    assert a.eigenvectors.tobytes() == b.eigenvectors.tobytes()


def test_zero_matrix():
    D = eig_symmetric(np.zeros((3, 3)))
    np.testing.assert_array_equal(D.eigenvalues, 0)


def test_sweep_cap_raises_with_residual():
    M = random_symmetric(np.random.default_rng(1), 8)
    with pytest.raises(JacobiConvergenceError) as info:
        eig_symmetric(M, max_sweeps=1)
    assert info.value.residual > 0


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        as_symmetric([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        as_symmetric(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eig_symmetric(np.eye(2), tol=0)


def test_basic_algebra():
    v = np.array([1.5, -2.0, 3.0])
    np.testing.assert_array_equal(matvec(np.eye(3), v), v)
    np.testing.assert_array_equal(matvec([[1, 2], [2, 1]], [1, 1]), [3, 3])
    assert frobenius_norm(np.zeros((3, 3))) == 0
    assert max_abs([[1, -4], [2, 3]]) == 4
    A = np.arange(6.0).reshape(2, 3)
    np.testing.assert_allclose(matmul(A, A.T), A @ A.T)
    with pytest.raises(ValueError):
        matvec(np.eye(3), np.ones(2))
    with pytest.raises(ValueError):
        matmul(np.eye(3), np.eye(2))


@pytest.mark.filterwarnings("error")
def test_extreme_scales():
    M = np.diag([1e200, 1.0, 0.5])
    M[0, 1] = M[1, 0] = 1e-200
    np.testing.assert_allclose(eig_symmetric(M).eigenvalues, [1e200, 1.0, 0.5])
    assert frobenius_norm(np.eye(4) * 1e-200) == pytest.approx(2e-200)
    assert frobenius_norm(np.eye(4) * 1e200) == pytest.approx(2e200)
