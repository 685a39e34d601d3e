import numpy as np
import pytest

from services.biorthonormal import (
    HamiltonianPath,
    build_system,
    build_system_path,
    completeness_defect,
)
from services.errors import DegenerateSpectrum, DimensionMismatch, TrackingAmbiguous
from services.two_level import analytic_frame, hamiltonian, hamiltonian_path, mode_index


def _separated_matrix(rng, n):
    """Random non-Hermitian matrix whose eigenvalues stay well apart"""
    noise = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return np.diag(2.0 * np.arange(n) + 0.5j * rng.standard_normal(n)) + 0.3 * noise


def test_defects_on_random_nondegenerate_matrices(rng):
    for trial in range(200):
        n = 1 + trial % 8
        H = _separated_matrix(rng, n)
        system = build_system(H)
        assert system.biorthonormality_defect() < 1e-9
        assert completeness_defect(system) < 1e-9
        np.testing.assert_allclose(H @ system.right, system.right * system.eigenvalues, atol=1e-9)
        np.testing.assert_allclose(H.conj().T @ system.left, system.left * system.eigenvalues.conj(), atol=1e-9)


def test_gauge_rescaling_preserves_invariants(rng):
    system = build_system(_separated_matrix(rng, 4))
    rescaled = system.rescaled(2, 0.3 - 1.7j)
    assert rescaled.biorthonormality_defect() < 1e-9
    assert completeness_defect(rescaled) < 1e-9
    with pytest.raises(ValueError):
        system.rescaled(0, 0.0)


def test_projectors_match_a_refined_solve(rng):
    H = _separated_matrix(rng, 5)
    coarse = build_system(H, tol=1e-8)
    fine = build_system(H, tol=1e-12)
    np.testing.assert_allclose(coarse.eigenvalues, fine.eigenvalues, atol=1e-9)
    for n in range(5):
        p_coarse = np.outer(coarse.right[:, n], coarse.left[:, n].conj())
        p_fine = np.outer(fine.right[:, n], fine.left[:, n].conj())
        np.testing.assert_allclose(p_coarse, p_fine, atol=1e-8)


def test_degenerate_spectrum_is_rejected():
    with pytest.raises(DegenerateSpectrum):
        build_system(np.eye(2))


def test_hamiltonian_path_validation():
    with pytest.raises(ValueError):
        HamiltonianPath(1.0, np.zeros((4, 2, 2)))
    with pytest.raises(DimensionMismatch):
        HamiltonianPath(1.0, np.zeros((8, 2, 3)))
    with pytest.raises(ValueError):
        HamiltonianPath(-1.0, np.zeros((8, 2, 2)))


def test_precessing_path_tracks_both_modes(precessing):
    sp = build_system_path(hamiltonian_path(precessing, 64))
    m1, m2 = mode_index(sp, precessing, 1), mode_index(sp, precessing, 2)
    assert {m1, m2} == {0, 1}
    np.testing.assert_allclose(sp.eigenvalues[:, m1], -precessing.E, atol=1e-10)
    np.testing.assert_allclose(sp.eigenvalues[:, m2], precessing.E, atol=1e-10)
    assert sp.biorthonormality_defect() < 1e-10


def test_numeric_frame_spans_the_analytic_eigenvectors(precessing):
    path = hamiltonian_path(precessing, 32)
    sp = build_system_path(path)
    for k in (0, 7, 19):
        exact = analytic_frame(precessing, path.times[k])
        for mode in (1, 2):
            psi = sp.right[k][:, mode_index(sp, precessing, mode)]
            reference = exact.right[:, mode - 1]
            cosine = abs(np.vdot(reference, psi)) / (np.linalg.norm(reference) * np.linalg.norm(psi))
            assert cosine == pytest.approx(1.0, abs=1e-12)


def test_closed_frame_is_single_valued(precessing):
    sp = build_system_path(hamiltonian_path(precessing, 64))
    closed = sp.closed()
    assert closed.is_single_valued
    np.testing.assert_allclose(closed.right[0], sp.right[0])
    np.testing.assert_allclose(closed.left[0], sp.left[0])
    assert closed.biorthonormality_defect() < 1e-10


def test_consecutive_overlaps_are_real_and_positive(precessing):
    sp = build_system_path(hamiltonian_path(precessing, 64))
    overlaps = np.einsum("kin,kin->kn", sp.right[:-1].conj(), sp.right[1:])
    assert np.all(overlaps.real > 0)
    np.testing.assert_allclose(overlaps.imag, 0.0, atol=1e-12)


def test_encircling_an_exceptional_point_swaps_labels():
    # eigenvalues +-exp(i t / 2) exchange after one turn
    path = HamiltonianPath.from_function(
        lambda t: np.array([[0.0, 1.0], [np.exp(1j * t), 0.0]]), 2.0 * np.pi, 64
    )
    with pytest.raises(TrackingAmbiguous):
        build_system_path(path)


def test_hamiltonian_is_vectorised(precessing):
    times = np.array([0.0, 0.3, 1.1])
    stacked = hamiltonian(precessing, times)
    assert stacked.shape == (3, 2, 2)
    np.testing.assert_allclose(stacked[1], hamiltonian(precessing, 0.3))


def test_hermitian_matrix_has_identical_left_and_right_vectors(rng):
    B = 0.3 * (rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))
    H = np.diag(2.0 * np.arange(5)) + 0.5 * (B + B.conj().T)
    system = build_system(H)
    np.testing.assert_allclose(system.left, system.right, atol=1e-12)
    np.testing.assert_allclose(system.eigenvalues.imag, 0.0, atol=1e-12)


def test_system_path_is_bit_for_bit_repeatable(precessing):
    path = hamiltonian_path(precessing, 32)
    first, second = build_system_path(path), build_system_path(path)
    np.testing.assert_array_equal(first.eigenvalues, second.eigenvalues)
    np.testing.assert_array_equal(first.right, second.right)
    np.testing.assert_array_equal(first.left, second.left)
    np.testing.assert_array_equal(first.holonomy, second.holonomy)


def test_constant_path_repeats_one_system():
    H = np.array([[1.0, 0.4], [0.1j, -0.5]])
    sp = build_system_path(HamiltonianPath.from_function(lambda t: H, 3.0, 16))
    reference = sp.system(0)
    for system in sp.systems:
        np.testing.assert_allclose(system.eigenvalues, reference.eigenvalues, atol=1e-14)
        np.testing.assert_allclose(system.right, reference.right, atol=1e-14)
        np.testing.assert_allclose(system.left, reference.left, atol=1e-14)
    np.testing.assert_allclose(sp.holonomy, 0.0, atol=1e-14)


def test_refined_sampling_reproduces_shared_samples(precessing):
    coarse = build_system_path(hamiltonian_path(precessing, 64))
    fine = build_system_path(hamiltonian_path(precessing, 128))
    for k in range(64):
        a, b = coarse.system(k), fine.system(2 * k)
        np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-9)
        for n in range(2):
            projector_a = np.outer(a.right[:, n], a.left[:, n].conj())
            projector_b = np.outer(b.right[:, n], b.left[:, n].conj())
            np.testing.assert_allclose(projector_a, projector_b, atol=1e-9)
