"""
Closed-form two-level model H = E [[cos theta, e^{-i phi} sin theta], [e^{i phi} sin theta, -cos theta]], phi = omega t + i phi_i
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.settings import RESONANCE_TOL
from services.biorthonormal import BiorthonormalSystem, HamiltonianPath, SystemPath
from services.evolution import PeriodicStatus

logger = logging.getLogger(__name__)

MODES = (1, 2)


@dataclass
class TwoLevelParams:
    """Precessing-field parameters; mode 1 has energy -E, mode 2 has +E"""
    E: complex
    theta: float
    phi_i: float
    omega: float

    def __post_init__(self):
        self.E = complex(self.E)
        self.theta = float(self.theta)
        self.phi_i = float(self.phi_i)
        self.omega = float(self.omega)
        if not np.isfinite(self.E) or self.E == 0:
            raise ValueError("E must be finite and nonzero")
        if not (np.isfinite(self.theta) and 0.0 <= self.theta <= np.pi):
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not np.isfinite(self.phi_i):
            raise ValueError("phi_i must be finite")
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be positive, got {self.omega}")

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def half_angles(self) -> Tuple[float, float]:
        return np.sin(0.5 * self.theta), np.cos(0.5 * self.theta)


@dataclass
class PeriodicValue:
    """Closed-form initial condition, or the resonance outcome"""
    status: PeriodicStatus
    value: Optional[complex] = None


@dataclass
class TwoLevelSolution:
    Q: complex
    drive: complex
    W_T: complex
    C1_0: PeriodicValue
    C2_0: PeriodicValue
    phases: Tuple[float, float, float, float]


def _check_mode(mode: int):
    if mode not in MODES:
        raise ValueError(f"mode must be 1 or 2, got {mode}")


def hamiltonian(p: TwoLevelParams, t) -> np.ndarray:
    """H(t); an array of times gives stacked (..., 2, 2) matrices"""
    t = np.asarray(t, dtype=float)
    phi = p.omega * t + 1j * p.phi_i
    c, s = np.cos(p.theta), np.sin(p.theta)
    H = np.empty(t.shape + (2, 2), dtype=complex)
    H[..., 0, 0] = c
    H[..., 0, 1] = np.exp(-1j * phi) * s
    H[..., 1, 0] = np.exp(1j * phi) * s
    H[..., 1, 1] = -c
    return p.E * H


def hamiltonian_path(p: TwoLevelParams, n_samples: int) -> HamiltonianPath:
    times = np.arange(n_samples) * (p.period / n_samples)
    return HamiltonianPath(p.period, hamiltonian(p, times))


def _frames(p: TwoLevelParams, t) -> Tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    S, C = p.half_angles
    phase = np.exp(1j * p.omega * t)
    right = np.empty(t.shape + (2, 2), dtype=complex)
    left = np.empty(t.shape + (2, 2), dtype=complex)
    # columns: mode 1 then mode 2
    right[..., 0, 0] = -np.conj(phase) * np.exp(p.phi_i) * S
    right[..., 1, 0] = C
    right[..., 0, 1] = C
    right[..., 1, 1] = phase * np.exp(-p.phi_i) * S
    left[..., 0, 0] = -np.conj(phase) * np.exp(-p.phi_i) * S
    left[..., 1, 0] = C
    left[..., 0, 1] = C
    left[..., 1, 1] = phase * np.exp(p.phi_i) * S
    return right, left


def analytic_frame(p: TwoLevelParams, t: float) -> BiorthonormalSystem:
    """Right and left eigenvectors in the printed closed form, E_1 = -E and E_2 = +E"""
    right, left = _frames(p, t)
    return BiorthonormalSystem(np.array([-p.E, p.E]), right, left)


def analytic_system_path(p: TwoLevelParams, n_samples: int) -> SystemPath:
    """Single-valued analytic frame sampled on the same grid as hamiltonian_path"""
    path = hamiltonian_path(p, n_samples)
    right, left = _frames(p, path.times)
    energies = np.tile(np.array([-p.E, p.E]), (n_samples, 1))
    return SystemPath.from_frames(path, energies, right, left)


def mode_index(sp: SystemPath, p: TwoLevelParams, mode: int) -> int:
    """Column of a numeric SystemPath carrying mode 1 (-E) or mode 2 (+E)"""
    _check_mode(mode)
    target = -p.E if mode == 1 else p.E
    return int(np.argmin(np.abs(sp.eigenvalues[0] - target)))


def closed_form_eta(p: TwoLevelParams) -> float:
    """Adiabaticity parameter in the unit-norm right-vector gauge"""
    S, C = p.half_angles
    n1 = np.sqrt(np.exp(2 * p.phi_i) * S**2 + C**2)
    n2 = np.sqrt(C**2 + np.exp(-2 * p.phi_i) * S**2)
    velocity = p.omega * S * C * max(np.exp(-p.phi_i) * n1 / n2, np.exp(p.phi_i) * n2 / n1)
    return float(velocity / (2.0 * abs(p.E)))


def _beta(p: TwoLevelParams, mode: int) -> float:
    S, C = p.half_angles
    weight = np.exp(2 * p.phi_i if mode == 2 else -2 * p.phi_i) * S**2
    return float(weight / (weight + C**2))


def scalar_coefficients(p: TwoLevelParams, mode: int = 2) -> Tuple[complex, complex]:
    """(Q, drive at t = 0) of dC/dt + Q C = drive(t) in the analytic frame

    For mode 2 the drive is drive0 * exp(i omega t); for mode 1 (labels interchanged)
    it rotates as exp(-i omega t).  Q is constant in both cases.
    """
    _check_mode(mode)
    beta = _beta(p, mode)
    strength = 2j * p.E * np.sin(p.theta) * np.sinh(p.phi_i)
    if mode == 2:
        return complex(-2j * (p.E + p.omega * beta)), complex(strength)
    return complex(2j * (p.E + p.omega * beta)), complex(-strength)


def drive_at(p: TwoLevelParams, t, mode: int = 2):
    _, drive0 = scalar_coefficients(p, mode)
    sign = 1.0 if mode == 2 else -1.0
    return drive0 * np.exp(1j * sign * p.omega * np.asarray(t, dtype=float))


def W_T(p: TwoLevelParams, mode: int = 2) -> complex:
    Q, _ = scalar_coefficients(p, mode)
    return complex(np.exp(-Q * p.period))


def _periodic_value(p: TwoLevelParams, mode: int, tol: float) -> PeriodicValue:
    Q, drive0 = scalar_coefficients(p, mode)
    nu = p.omega if mode == 2 else -p.omega
    denominator = Q + 1j * nu
    W = np.exp(-Q * p.period)
    scale = max(1.0, abs(Q))
    particular = drive0 / denominator if abs(denominator) > tol * scale else None

    if abs(1.0 - W) < tol * (1.0 + abs(W)):
        # drive endpoint b = drive0 (1 - W) / (Q + i nu), tending to drive0 T on exact resonance
        endpoint = drive0 * p.period if particular is None else drive0 * (1.0 - W) / denominator
        if abs(endpoint) <= tol * max(1.0, abs(drive0) * p.period):
            # every C0 is periodic; report the minimum-norm one
            return PeriodicValue(PeriodicStatus.ALL_PERIODIC, 0j)
        logger.debug(f"Mode {mode} resonance: W(T)={W:.12g}")
        return PeriodicValue(PeriodicStatus.RESONANCE, None)

    S, C = p.half_angles
    weight = np.exp(2 * p.phi_i if mode == 2 else -2 * p.phi_i) * S**2
    ratio = (weight - C**2) / (weight + C**2)
    value = -np.sinh(p.phi_i) * np.sin(p.theta) / (1.0 + (np.pi / (p.E * p.period)) * ratio)
    return PeriodicValue(PeriodicStatus.PERIODIC, complex(value))


def periodic_C1(p: TwoLevelParams, tol: float = RESONANCE_TOL) -> PeriodicValue:
    """C~_1(0) for the cyclic state built around phi_2"""
    return _periodic_value(p, 2, tol)


def periodic_C2(p: TwoLevelParams, tol: float = RESONANCE_TOL) -> PeriodicValue:
    """C~_2(0) for the cyclic state built around phi_1"""
    return _periodic_value(p, 1, tol)


def closed_form_phases(p: TwoLevelParams) -> Tuple[float, float, float, float]:
    """(gamma_1, gamma_2, gamma~_1, gamma~_2) for the precessing loop"""
    S, C = p.half_angles
    gamma1 = np.pi * (1.0 - np.cos(p.theta))
    # S^2 / (S^2 + e^{2 phi_i} C^2) is 1 / (1 + e^{2 phi_i} cot^2) without the pole at theta = 0
    gamma_tilde1 = 2.0 * np.pi * S**2 / (S**2 + np.exp(2 * p.phi_i) * C**2)
    gamma_tilde2 = -2.0 * np.pi * S**2 / (S**2 + np.exp(-2 * p.phi_i) * C**2)
    return float(gamma1), float(-gamma1), float(gamma_tilde1), float(gamma_tilde2)


def loop_phases(theta, phi_r, phi_i, winding: int = 1) -> Tuple[complex, complex, float, float]:
    """Line integrals of the two-level phases along a sampled closed curve

    Samples cover one traversal without repeating the start; phi_r advances by
    2 pi * winding over the loop.  Trapezoid rule on the segments.
    """
    theta = np.append(np.asarray(theta, dtype=float), theta[0])
    phi_r = np.asarray(phi_r, dtype=float)
    phi_r = np.append(phi_r, phi_r[0] + 2.0 * np.pi * winding)
    phi_i = np.broadcast_to(np.asarray(phi_i, dtype=float), phi_r[:-1].shape)
    phi_i = np.append(phi_i, phi_i[0])

    d_phi = np.diff(phi_r) + 1j * np.diff(phi_i)
    d_phi_r = np.diff(phi_r)
    S2, C2 = np.sin(0.5 * theta) ** 2, np.cos(0.5 * theta) ** 2

    def segments(values):
        return 0.5 * (values[:-1] + values[1:])

    gamma1 = 0.5 * np.sum(segments(1.0 - np.cos(theta)) * d_phi)
    tilde1 = np.sum(segments(S2 / (S2 + np.exp(2 * phi_i) * C2)) * d_phi_r)
    tilde2 = -np.sum(segments(S2 / (S2 + np.exp(-2 * phi_i) * C2)) * d_phi_r)
    return complex(gamma1), complex(-gamma1), float(tilde1), float(tilde2)


def to_analytic_gauge(p: TwoLevelParams, sp: SystemPath, mode: int, C_numeric: complex) -> complex:
    """Express a numeric-frame C~(0) in the analytic frame

    `mode` is the label m of the left vector phi_m the cyclic state is built on.
    """
    _check_mode(mode)
    other = 2 if mode == 1 else 1
    exact = analytic_frame(p, 0.0)
    i_m, i_o = mode_index(sp, p, mode), mode_index(sp, p, other)
    c_other = np.vdot(exact.left[:, other - 1], sp.right[0][:, i_o])
    c_mode = np.vdot(exact.left[:, mode - 1], sp.right[0][:, i_m])
    return complex(C_numeric * c_other * np.conj(c_mode))


def solve_two_level(p: TwoLevelParams) -> TwoLevelSolution:
    """Every closed-form quantity of the precessing model"""
    Q, drive = scalar_coefficients(p, 2)
    return TwoLevelSolution(
        Q=Q,
        drive=drive,
        W_T=W_T(p, 2),
        C1_0=periodic_C1(p),
        C2_0=periodic_C2(p),
        phases=closed_form_phases(p),
    )
