"""
Adiabatic connections, phase angles and the adiabaticity parameter along closed loops
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.settings import DEGENERACY_TOL, FD_ORDER, REALNESS_TOL
from services.biorthonormal import SystemPath
from services.errors import DegenerateSpectrum, RealnessViolation

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
ESTIMATORS = ("direct", "hamiltonian")


@dataclass
class ConnectionSamples:
    """A_mn = i<phi_m|dpsi_n/dt> and A~_mn = i<phi_m|dphi_n/dt>/<phi_n|phi_n> on the sample grid"""
    A: np.ndarray
    A_tilde: np.ndarray
    times: np.ndarray
    estimator: str = "direct"


@dataclass
class PhaseReport:
    mode_m: int
    delta: complex
    gamma: complex
    gamma_tilde: float
    eta: float
    relation_residual: float
    holonomy_compensation: complex
    realness_defect: float = 0.0


def wrap_angle(angle: float) -> float:
    """Display value of an angle in [0, 2 pi)"""
    wrapped = float(np.mod(angle, TWO_PI))
    return 0.0 if wrapped == TWO_PI else wrapped


def angle_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle"""
    return float(abs(np.angle(np.exp(1j * (a - b)))))


def nearest_branch(angle: float, reference: float) -> float:
    """Shift angle by a multiple of 2 pi to lie closest to reference"""
    return float(angle + TWO_PI * np.round((reference - angle) / TWO_PI))


def periodic_derivative(frames: np.ndarray, step: float, twist: Optional[np.ndarray] = None,
                        order: int = FD_ORDER) -> np.ndarray:
    """Central differences along axis 0 of a periodic (N, ...) series

    `twist` continues an open frame across the seam: sample N is taken as
    twist * sample 0, broadcast over the trailing (mode) axis.
    """
    if order not in (2, 4):
        raise ValueError(f"finite difference order must be 2 or 4, got {order}")
    frames = np.asarray(frames)
    factor = np.ones(frames.shape[-1], dtype=complex) if twist is None else np.asarray(twist, dtype=complex)

    def shifted(offset: int) -> np.ndarray:
        out = np.roll(frames, -offset, axis=0).astype(complex)
        if offset > 0:
            out[-offset:] *= factor
        elif offset < 0:
            out[:-offset] *= np.conj(factor)
        return out

    if order == 2:
        return (shifted(1) - shifted(-1)) / (2.0 * step)
    return (-shifted(2) + 8.0 * shifted(1) - 8.0 * shifted(-1) + shifted(-2)) / (12.0 * step)


def frame_derivatives(sp: SystemPath, order: int = FD_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Time derivatives of the right and left frames"""
    twist = np.exp(1j * sp.holonomy)
    step = sp.path.step
    return (periodic_derivative(sp.right, step, twist, order),
            periodic_derivative(sp.left, step, twist, order))


def connection_samples(sp: SystemPath, estimator: str = "direct",
                       order: int = FD_ORDER) -> ConnectionSamples:
    """Connection coefficients A and A~ at every sample"""
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")

    dpsi, dphi = frame_derivatives(sp, order)
    A = 1j * np.einsum("kim,kin->kmn", sp.left.conj(), dpsi)
    phi_norms = np.einsum("kin,kin->kn", sp.left.conj(), sp.left).real
    A_tilde = 1j * np.einsum("kim,kin->kmn", sp.left.conj(), dphi) / phi_norms[:, None, :]

    if estimator == "hamiltonian" and sp.dim > 1:
        # <phi_m|dpsi_n> = <phi_m|dH|psi_n> / (E_n - E_m) for m != n
        dH = periodic_derivative(sp.path.samples, sp.path.step, order=order)
        projected = np.einsum("kim,kij,kjn->kmn", sp.left.conj(), dH, sp.right)
        gaps = sp.eigenvalues[:, None, :] - sp.eigenvalues[:, :, None]
        off = ~np.eye(sp.dim, dtype=bool)
        A_h = A.copy()
        A_h[:, off] = 1j * projected[:, off] / gaps[:, off]
        A = A_h

    return ConnectionSamples(A, A_tilde, sp.times, estimator)


def _check_mode(sp: SystemPath, m: int):
    if not 0 <= m < sp.dim:
        raise ValueError(f"mode index {m} out of range for dimension {sp.dim}")


def adiabaticity_eta(sp: SystemPath, conn: Optional[ConnectionSamples] = None,
                     degeneracy_tol: float = DEGENERACY_TOL) -> float:
    """eta = max_{t, m != n} |<phi_m|dpsi_n/dt>| / omega0, omega0 the minimal gap over the loop"""
    if sp.dim < 2:
        return 0.0
    diffs = np.abs(sp.eigenvalues[:, :, None] - sp.eigenvalues[:, None, :])
    off = ~np.eye(sp.dim, dtype=bool)
    omega0 = float(diffs[:, off].min())
    if omega0 <= degeneracy_tol * max(1.0, sp.path.scale()):
        raise DegenerateSpectrum(f"minimal gap {omega0:.3e} over the loop is degenerate")

    if conn is None:
        conn = connection_samples(sp)
    velocity = float(np.abs(conn.A[:, off]).max())
    return velocity / omega0


def dynamical_phase(sp: SystemPath, m: int) -> complex:
    """delta_m = -int_0^T E_m dt"""
    _check_mode(sp, m)
    return complex(-sp.path.step * np.sum(sp.eigenvalues[:, m]))


def _loop_integral(values: np.ndarray, sp: SystemPath, m: int) -> complex:
    return complex(sp.path.step * np.sum(values) + sp.holonomy[m])


def geometric_phase_complex(sp: SystemPath, m: int,
                            conn: Optional[ConnectionSamples] = None) -> complex:
    """gamma_m = loop integral of i<phi_m|dpsi_m>"""
    _check_mode(sp, m)
    if conn is None:
        conn = connection_samples(sp)
    return _loop_integral(conn.A[:, m, m], sp, m)


def realness_defect(sp: SystemPath, m: int, conn: Optional[ConnectionSamples] = None) -> float:
    """|Im| of the loop integral of A~_mm before the real part is taken"""
    _check_mode(sp, m)
    if conn is None:
        conn = connection_samples(sp)
    return abs(_loop_integral(conn.A_tilde[:, m, m], sp, m).imag)


def geometric_phase_real(sp: SystemPath, m: int, conn: Optional[ConnectionSamples] = None,
                         realness_tol: float = REALNESS_TOL) -> float:
    """gamma~_m = loop integral of i<phi_m|dphi_m>/<phi_m|phi_m>, real for closed loops"""
    _check_mode(sp, m)
    if conn is None:
        conn = connection_samples(sp)
    value = _loop_integral(conn.A_tilde[:, m, m], sp, m)
    if abs(value.imag) >= realness_tol * max(1.0, abs(value)):
        raise RealnessViolation(
            f"mode {m}: imaginary part {value.imag:.3e} of the real geometric phase exceeds tolerance"
        )
    return value.real


def phase_relation_residual(sp: SystemPath, m: int, conn: Optional[ConnectionSamples] = None) -> float:
    """| gamma~_m - gamma_m - sum_{n != m} int <phi_n|phi_m> A_mn / <phi_m|phi_m> dt |"""
    _check_mode(sp, m)
    if conn is None:
        conn = connection_samples(sp)
    # Holonomy terms enter both phases identically and cancel
    h = sp.path.step
    gamma = h * np.sum(conn.A[:, m, m])
    gamma_tilde = h * np.sum(conn.A_tilde[:, m, m])

    if sp.dim > 1:
        gram = np.einsum("kin,ki->kn", sp.left.conj(), sp.left[:, :, m])  # <phi_n|phi_m>
        weights = gram / gram[:, m].real[:, None]
        others = [n for n in range(sp.dim) if n != m]
        correction = h * np.sum(weights[:, others] * conn.A[:, m, others])
    else:
        correction = 0.0
    return float(abs(gamma_tilde - gamma - correction))


def phase_report(sp: SystemPath, m: int, conn: Optional[ConnectionSamples] = None) -> PhaseReport:
    """All loop quantities for mode m"""
    if conn is None:
        conn = connection_samples(sp)
    report = PhaseReport(
        mode_m=m,
        delta=dynamical_phase(sp, m),
        gamma=geometric_phase_complex(sp, m, conn),
        gamma_tilde=geometric_phase_real(sp, m, conn),
        eta=adiabaticity_eta(sp, conn),
        relation_residual=phase_relation_residual(sp, m, conn),
        holonomy_compensation=complex(sp.holonomy[m]),
        realness_defect=realness_defect(sp, m, conn),
    )
    logger.debug(f"Phase report for mode {m}: {report}")
    return report
