import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from services.complex_linalg import adjoint, eig_complex, inner, lu_solve, matmul, matvec, norm
from services.errors import DimensionMismatch, EmptyMatrix, SingularMatrix


def _random_matrix(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def test_eig_residuals_on_random_matrices(rng):
    for trial in range(200):
        n = 1 + trial % 8
        A = _random_matrix(rng, n)
        spectrum = eig_complex(A)
        assert len(spectrum) == n
        residuals = np.linalg.norm(A @ spectrum.vectors - spectrum.vectors * spectrum.eigenvalues, axis=0)
        assert residuals.max() < 1e-9
        assert spectrum.max_residual < 1e-9
        np.testing.assert_allclose(np.linalg.norm(spectrum.vectors, axis=0), 1.0, atol=1e-12)


def test_eigenvalues_agree_with_lapack(rng):
    for n in (2, 3, 5, 8):
        A = _random_matrix(rng, n) + np.diag(3.0 * np.arange(n))
        ours = eig_complex(A).eigenvalues
        reference = np.linalg.eigvals(A)
        rows, cols = linear_sum_assignment(np.abs(ours[:, None] - reference[None, :]))
        assert np.max(np.abs(ours[rows] - reference[cols])) < 1e-9 * max(1.0, norm(A))


def test_eigenvalues_are_sorted_by_real_then_imaginary_part():
    A = np.diag([2.0 + 1.0j, -1.0 + 0.0j, 2.0 - 1.0j, 0.5j])
    values = eig_complex(A).eigenvalues
    np.testing.assert_allclose(values, [-1.0, 0.5j, 2.0 - 1.0j, 2.0 + 1.0j], atol=1e-12)


def test_non_normal_two_by_two():
    A = np.array([[1.0, 100.0], [0.0, 2.0]], dtype=complex)
    spectrum = eig_complex(A)
    np.testing.assert_allclose(spectrum.eigenvalues, [1.0, 2.0], atol=1e-12)
    assert spectrum.max_residual < 1e-9 * norm(A)


def test_zero_matrix_has_identity_eigenvectors():
    spectrum = eig_complex(np.zeros((3, 3)))
    np.testing.assert_array_equal(spectrum.eigenvalues, np.zeros(3))
    np.testing.assert_array_equal(spectrum.vectors, np.eye(3))


def test_eig_rejects_bad_input():
    with pytest.raises(EmptyMatrix):
        eig_complex(np.zeros((0, 0)))
    with pytest.raises(DimensionMismatch):
        eig_complex(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        eig_complex(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_lu_solve(rng):
    A = _random_matrix(rng, 6) + 6.0 * np.eye(6)
    b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    x = lu_solve(A, b)
    np.testing.assert_allclose(A @ x, b, atol=1e-12)


def test_lu_solve_failures():
    with pytest.raises(SingularMatrix):
        lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
    with pytest.raises(EmptyMatrix):
        lu_solve(np.zeros((0, 0)), np.zeros(0))
    with pytest.raises(DimensionMismatch):
        lu_solve(np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        lu_solve(np.eye(2), np.array([1.0, np.inf]))


def test_inner_is_conjugate_linear_in_first_slot():
    assert inner([1j, 0.0], [1.0, 0.0]) == -1j
    with pytest.raises(DimensionMismatch):
        inner([1.0], [1.0, 2.0])


def test_matvec_checks_dimensions():
    np.testing.assert_allclose(matvec(np.eye(2), [1.0, 2.0]), [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        matvec(np.eye(2), [1.0, 2.0, 3.0])


def test_adjoint_and_matmul(rng):
    A = _random_matrix(rng, 3)
    np.testing.assert_array_equal(adjoint(adjoint(A)), A)
    np.testing.assert_allclose(matmul(A, np.eye(3)), A)
    with pytest.raises(DimensionMismatch):
        matmul(A, np.ones((2, 2)))


def test_near_defective_pair_keeps_nearly_parallel_vectors():
    A = np.array([[1.0, 1e6], [0.0, 1.0 + 1e-6]], dtype=complex)
    spectrum = eig_complex(A)
    np.testing.assert_allclose(spectrum.eigenvalues, [1.0, 1.0 + 1e-6], rtol=0, atol=1e-12)
    residuals = np.linalg.norm(A @ spectrum.vectors - spectrum.vectors * spectrum.eigenvalues, axis=0)
    assert residuals.max() <= 1e-10 * norm(A)
    np.testing.assert_allclose(np.abs(spectrum.vectors[0]), [1.0, 1.0], atol=1e-9)


def test_repeated_eigenvalue_gets_independent_vectors():
    spectrum = eig_complex(2.0 * np.eye(3))
    np.testing.assert_allclose(spectrum.eigenvalues, [2.0, 2.0, 2.0])
    np.testing.assert_allclose(spectrum.vectors.conj().T @ spectrum.vectors, np.eye(3), atol=1e-12)


def test_adjoint_spectrum_is_the_conjugate(rng):
    for n in (2, 5, 9, 16):
        A = _random_matrix(rng, n)
        direct = np.conj(eig_complex(A).eigenvalues)
        adjoint_values = eig_complex(adjoint(A)).eigenvalues
        rows, cols = linear_sum_assignment(np.abs(direct[:, None] - adjoint_values[None, :]))
        assert np.max(np.abs(direct[rows] - adjoint_values[cols])) < 1e-9 * max(1.0, norm(A))


def test_eig_is_bit_for_bit_repeatable(rng):
    A = _random_matrix(rng, 6)
    first, second = eig_complex(A), eig_complex(A)
    np.testing.assert_array_equal(first.eigenvalues, second.eigenvalues)
    np.testing.assert_array_equal(first.vectors, second.vectors)
