import numpy as np
import pytest

from services.biorthonormal import HamiltonianPath, SystemPath, build_system_path
from services.errors import RealnessViolation
from services.phases import (
    adiabaticity_eta,
    angle_distance,
    connection_samples,
    dynamical_phase,
    geometric_phase_complex,
    geometric_phase_real,
    nearest_branch,
    phase_relation_residual,
    phase_report,
    periodic_derivative,
    realness_defect,
    wrap_angle,
)
from services.two_level import (
    TwoLevelParams,
    analytic_system_path,
    closed_form_eta,
    closed_form_phases,
    hamiltonian_path,
    mode_index,
)

THETAS = np.linspace(np.pi / 6, 5 * np.pi / 6, 5)
PHI_IS = np.linspace(-0.5, 0.5, 5)


def _wobbling_path(n_samples: int) -> HamiltonianPath:
    """Precessing field whose polar angle and imaginary azimuth both oscillate"""
    def hamiltonian(t):
        theta = 1.0 + 0.4 * np.sin(t)
        phi = t + 1j * (0.3 + 0.2 * np.cos(t))
        c, s = np.cos(theta), np.sin(theta)
        return np.array([[c, np.exp(-1j * phi) * s], [np.exp(1j * phi) * s, -c]])
    return HamiltonianPath.from_function(hamiltonian, 2.0 * np.pi, n_samples)


def test_wrap_and_branch_helpers():
    assert wrap_angle(-0.5) == pytest.approx(2 * np.pi - 0.5)
    assert wrap_angle(2 * np.pi) == 0.0
    assert angle_distance(0.1, 2 * np.pi - 0.1) == pytest.approx(0.2)
    assert nearest_branch(0.1, 4 * np.pi) == pytest.approx(0.1 + 4 * np.pi)


def test_periodic_derivative_is_fourth_order():
    errors = []
    for n in (32, 64):
        t = np.arange(n) * (2 * np.pi / n)
        values = np.exp(1j * t)[:, None]
        derivative = periodic_derivative(values, 2 * np.pi / n, order=4)
        errors.append(np.max(np.abs(derivative[:, 0] - 1j * np.exp(1j * t))))
    assert errors[0] / errors[1] == pytest.approx(16.0, rel=0.05)


def test_berry_limit_on_numeric_frame():
    p = TwoLevelParams(E=1.0, theta=np.pi / 2, phi_i=0.0, omega=0.01)
    sp = build_system_path(hamiltonian_path(p, 2048))
    m = mode_index(sp, p, 1)
    report = phase_report(sp, m)
    assert angle_distance(report.gamma.real, np.pi) < 1e-6
    assert abs(report.gamma.imag) < 1e-9
    assert angle_distance(report.gamma_tilde, np.pi) < 1e-6


def test_analytic_gauge_connection_is_omega_sin_squared(precessing):
    sp = analytic_system_path(precessing, 256)
    conn = connection_samples(sp)
    S2 = np.sin(precessing.theta / 2) ** 2
    np.testing.assert_allclose(conn.A[:, 0, 0], precessing.omega * S2, atol=1e-8)


def test_real_phase_matches_closed_form_over_grid():
    for theta in THETAS:
        for phi_i in PHI_IS:
            p = TwoLevelParams(E=1.0, theta=theta, phi_i=phi_i, omega=0.05)
            sp = analytic_system_path(p, 512)
            conn = connection_samples(sp)
            _, _, tilde1, tilde2 = closed_form_phases(p)
            assert angle_distance(geometric_phase_real(sp, 0, conn), tilde1) < 1e-6 * max(1.0, abs(tilde1))
            assert angle_distance(geometric_phase_real(sp, 1, conn), tilde2) < 1e-6 * max(1.0, abs(tilde2))
            assert realness_defect(sp, 0, conn) < 1e-9
            assert realness_defect(sp, 1, conn) < 1e-9


def test_complex_phase_ignores_phi_i_while_real_phase_follows_it():
    theta = np.pi / 3
    gammas, tildes, expected = [], [], []
    for phi_i in PHI_IS:
        p = TwoLevelParams(E=1.0, theta=theta, phi_i=phi_i, omega=0.05)
        sp = analytic_system_path(p, 512)
        conn = connection_samples(sp)
        gammas.append(geometric_phase_complex(sp, 0, conn))
        tildes.append(geometric_phase_real(sp, 0, conn))
        expected.append(closed_form_phases(p)[2])
    gammas = np.array(gammas)
    assert np.ptp(gammas.real) < 1e-6
    assert np.max(np.abs(gammas.imag)) < 1e-6
    np.testing.assert_allclose(np.ptp(tildes), np.ptp(expected), atol=1e-6)
    assert np.ptp(tildes) > 0.5


def test_numeric_and_analytic_frames_agree_mod_two_pi():
    p = TwoLevelParams(E=1.0, theta=2 * np.pi / 3, phi_i=0.3, omega=0.05)
    sp = build_system_path(hamiltonian_path(p, 512))
    _, _, tilde1, tilde2 = closed_form_phases(p)
    assert angle_distance(geometric_phase_real(sp, mode_index(sp, p, 1)), tilde1) < 1e-6
    assert angle_distance(geometric_phase_real(sp, mode_index(sp, p, 2)), tilde2) < 1e-6


def test_phases_are_invariant_under_a_periodic_gauge(precessing):
    sp = analytic_system_path(precessing, 1024)
    t = sp.times
    gauge = (1.5 + 0.3 * np.cos(precessing.omega * t)) * np.exp(1j * np.sin(precessing.omega * t))
    regauged = SystemPath.from_frames(
        sp.path,
        sp.eigenvalues,
        sp.right * gauge[:, None, None],
        sp.left / np.conj(gauge)[:, None, None],
    )
    for m in (0, 1):
        assert geometric_phase_real(regauged, m) == pytest.approx(geometric_phase_real(sp, m), abs=1e-8)
        assert geometric_phase_complex(regauged, m) == pytest.approx(geometric_phase_complex(sp, m), abs=1e-8)


def test_phase_relation_residual_is_small_on_fine_grid():
    for theta in THETAS:
        for phi_i in PHI_IS:
            p = TwoLevelParams(E=1.0, theta=theta, phi_i=phi_i, omega=0.05)
            sp = analytic_system_path(p, 4096)
            conn = connection_samples(sp)
            assert phase_relation_residual(sp, 0, conn) < 1e-6
            assert phase_relation_residual(sp, 1, conn) < 1e-6


def test_phase_relation_residual_converges_at_second_order():
    residuals = []
    for n in (128, 256):
        sp = build_system_path(_wobbling_path(n))
        residuals.append(phase_relation_residual(sp, 0, connection_samples(sp, order=2)))
    assert residuals[0] / residuals[1] >= 2.0 ** 1.9


def test_dynamical_phase_of_constant_energies(precessing):
    sp = analytic_system_path(precessing, 64)
    assert dynamical_phase(sp, 0) == pytest.approx(precessing.E * precessing.period)
    assert dynamical_phase(sp, 1) == pytest.approx(-precessing.E * precessing.period)


def test_eta_matches_closed_form():
    for phi_i in (0.0, 0.2, -0.4):
        p = TwoLevelParams(E=1.0, theta=np.pi / 3, phi_i=phi_i, omega=0.05)
        sp = build_system_path(hamiltonian_path(p, 256))
        assert adiabaticity_eta(sp) == pytest.approx(closed_form_eta(p), rel=1e-6)


def test_hamiltonian_estimator_agrees_with_direct_one(precessing):
    sp = build_system_path(hamiltonian_path(precessing, 256))
    direct = connection_samples(sp)
    via_h = connection_samples(sp, estimator="hamiltonian")
    np.testing.assert_allclose(via_h.A[:, 0, 1], direct.A[:, 0, 1], atol=1e-7)
    np.testing.assert_allclose(via_h.A[:, 1, 0], direct.A[:, 1, 0], atol=1e-7)
    with pytest.raises(ValueError):
        connection_samples(sp, estimator="spline")


def test_realness_violation_for_a_non_periodic_norm(precessing):
    sp = analytic_system_path(precessing, 64)
    # growing left-vector norm breaks the closed-loop realness
    drift = np.exp(2.0 * sp.times / sp.period)
    broken = SystemPath.from_frames(sp.path, sp.eigenvalues, sp.right, sp.left * drift[:, None, None])
    with pytest.raises(RealnessViolation):
        geometric_phase_real(broken, 0)


@pytest.mark.slow
def test_real_phase_on_numeric_frame_at_slow_driving():
    for theta in THETAS:
        for phi_i in PHI_IS:
            p = TwoLevelParams(E=1.0, theta=theta, phi_i=phi_i, omega=0.01)
            sp = build_system_path(hamiltonian_path(p, 4096))
            conn = connection_samples(sp)
            _, _, tilde1, tilde2 = closed_form_phases(p)
            for mode, expected in ((1, tilde1), (2, tilde2)):
                m = mode_index(sp, p, mode)
                assert angle_distance(geometric_phase_real(sp, m, conn), expected) < 1e-6 * max(1.0, abs(expected))
                assert realness_defect(sp, m, conn) < 1e-9


def test_eta_halves_with_omega():
    for phi_i in (0.0, 0.3):
        fast = TwoLevelParams(E=1.0, theta=np.pi / 3, phi_i=phi_i, omega=0.05)
        slow = TwoLevelParams(E=1.0, theta=np.pi / 3, phi_i=phi_i, omega=0.025)
        assert closed_form_eta(slow) / closed_form_eta(fast) == pytest.approx(0.5, rel=1e-2)
        numeric_fast = adiabaticity_eta(build_system_path(hamiltonian_path(fast, 256)))
        numeric_slow = adiabaticity_eta(build_system_path(hamiltonian_path(slow, 256)))
        assert numeric_slow / numeric_fast == pytest.approx(0.5, rel=1e-2)


def test_constant_hamiltonian_has_no_geometric_phase():
    H = np.array([[1.0, 0.4], [0.1j, -0.5]])
    sp = build_system_path(HamiltonianPath.from_function(lambda t: H, 3.0, 32))
    conn = connection_samples(sp)
    for m in range(2):
        assert abs(geometric_phase_complex(sp, m, conn)) < 1e-12
        assert abs(geometric_phase_real(sp, m, conn)) < 1e-12
    assert adiabaticity_eta(sp, conn) < 1e-12
