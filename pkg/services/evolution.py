"""
Time evolution engine: Schrodinger propagation, monodromy, and the reduced coefficient system
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from config.settings import (
    DEFAULT_STEPS,
    EIG_TOL,
    FD_ORDER,
    OVERLAP_TOL,
    RESONANCE_TOL,
    UNSTABLE_NORM,
)
from services.biorthonormal import HamiltonianPath, SystemPath
from services.complex_linalg import Spectrum, as_vector, eig_complex, lu_solve
from services.errors import (
    DimensionMismatch,
    OverlapSingular,
    Resonance,
    StepCountTooSmall,
    UnstableEvolution,
)
from services.interpolation import PeriodicInterpolant
from services.phases import (
    adiabaticity_eta,
    connection_samples,
    dynamical_phase,
    frame_derivatives,
    geometric_phase_real,
    nearest_branch,
)

logger = logging.getLogger(__name__)

METHODS = ("rk4", "magnus4")
STEPS_PER_SAMPLE = 4
_CHUNK = 2048
_GAUSS = (0.5 - np.sqrt(3.0) / 6.0, 0.5 + np.sqrt(3.0) / 6.0)

Generator = Callable[[np.ndarray], np.ndarray]


class PeriodicStatus(Enum):
    PERIODIC = "periodic"
    RESONANCE = "resonance"
    ALL_PERIODIC = "all_periodic"


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray          # (steps + 1, d)
    initial_state: np.ndarray
    estimated_error: float = 0.0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass
class Monodromy:
    U_T: np.ndarray
    step_count: int
    estimated_error: float = 0.0


@dataclass
class ReducedCoefficients:
    mode_m: int
    times: np.ndarray
    C_tilde_n: np.ndarray       # (steps + 1, d - 1), off-mode coefficients
    C_tilde: np.ndarray         # (steps + 1,), overall factor with C~(0) = 1


@dataclass
class PeriodicSolution:
    mode_m: int
    status: PeriodicStatus
    C0: np.ndarray
    homogeneous_monodromy: np.ndarray
    drive_endpoint: np.ndarray
    smallest_singular_value: float


@dataclass
class CyclicityAssessment:
    mode_m: int
    defect: float
    eta: float
    total_phase: complex
    predicted_phase: complex
    dynamical_phase: complex
    gamma_tilde: float
    initial_state: np.ndarray
    final_state: np.ndarray
    C0: np.ndarray
    integration_error: float = 0.0

    @property
    def measured_geometric(self) -> complex:
        return self.total_phase - self.dynamical_phase

    @property
    def defect_ratio(self) -> float:
        return self.defect / self.eta if self.eta > 0 else float("inf")


def _check_method(method: str):
    if method not in METHODS:
        raise ValueError(f"integrator must be one of {METHODS}, got {method!r}")


def _check_steps(steps: int, n_samples: int):
    if steps < STEPS_PER_SAMPLE * n_samples:
        raise StepCountTooSmall(
            f"steps={steps} is below {STEPS_PER_SAMPLE} per Hamiltonian sample ({STEPS_PER_SAMPLE * n_samples})"
        )


def _check_growth(Y: np.ndarray, t: float, limit: float):
    size = float(np.max(np.linalg.norm(Y, axis=0)))
    if not np.isfinite(size) or size > limit:
        raise UnstableEvolution(f"state norm {size:.3e} exceeded {limit:.1e} at t={t:.6g}")


def integrate_linear(generator: Generator, Y0: np.ndarray, t_final: float, steps: int,
                     method: str = "rk4", record: bool = False,
                     unstable_norm: float = UNSTABLE_NORM) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Fixed-step fourth order integration of dY/dt = A(t) Y on [0, t_final]

    `generator` maps an array of times to the stacked matrices A(t).
    """
    _check_method(method)
    Y = np.array(Y0, dtype=complex)
    h = t_final / steps
    states = np.empty((steps + 1,) + Y.shape, dtype=complex) if record else None
    if record:
        states[0] = Y

    for j0 in range(0, steps, _CHUNK):
        j1 = min(steps, j0 + _CHUNK)
        if method == "rk4":
            half = generator((2 * j0 + np.arange(2 * (j1 - j0) + 1)) * (0.5 * h))
            for i in range(j1 - j0):
                A1, A2, A3 = half[2 * i], half[2 * i + 1], half[2 * i + 2]
                k1 = A1 @ Y
                k2 = A2 @ (Y + 0.5 * h * k1)
                k3 = A2 @ (Y + 0.5 * h * k2)
                k4 = A3 @ (Y + h * k3)
                Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                _check_growth(Y, (j0 + i + 1) * h, unstable_norm)
                if record:
                    states[j0 + i + 1] = Y
        else:
            starts = (j0 + np.arange(j1 - j0)) * h
            A1 = generator(starts + _GAUSS[0] * h)
            A2 = generator(starts + _GAUSS[1] * h)
            omega = 0.5 * h * (A1 + A2) + (np.sqrt(3.0) * h * h / 12.0) * (A2 @ A1 - A1 @ A2)
            flows = expm(omega)
            for i in range(j1 - j0):
                Y = flows[i] @ Y
                _check_growth(Y, (j0 + i + 1) * h, unstable_norm)
                if record:
                    states[j0 + i + 1] = Y

    return Y, states


def _schrodinger_generator(path: HamiltonianPath) -> Generator:
    hamiltonian = PeriodicInterpolant(path.samples, path.period)
    return lambda t: -1j * hamiltonian(t)


def propagate(path: HamiltonianPath, psi0, steps: int = DEFAULT_STEPS, t_final: Optional[float] = None,
              method: str = "rk4", estimate_error: bool = True) -> Trajectory:
    """Integrate i dpsi/dt = H(t) psi from psi0 over [0, t_final] (default one period)"""
    psi0 = as_vector(psi0, "psi0")
    if psi0.size != path.dim:
        raise DimensionMismatch(f"initial state has dim {psi0.size}, Hamiltonian has dim {path.dim}")
    if np.linalg.norm(psi0) == 0:
        raise ValueError("initial state must be nonzero")
    _check_steps(steps, path.n_samples)
    t_final = path.period if t_final is None else float(t_final)

    generator = _schrodinger_generator(path)
    final, states = integrate_linear(generator, psi0, t_final, steps, method, record=True)

    error = 0.0
    if estimate_error and steps >= 2:
        coarse, _ = integrate_linear(generator, psi0, t_final, steps // 2, method)
        error = float(np.linalg.norm(final - coarse)) / 15.0

    times = np.arange(steps + 1) * (t_final / steps)
    logger.debug(f"Propagated {steps} {method} steps to t={t_final:.6g}, error estimate {error:.3e}")
    return Trajectory(times, states, psi0, error)


def monodromy(path: HamiltonianPath, steps: int = DEFAULT_STEPS, method: str = "rk4",
              estimate_error: bool = True) -> Monodromy:
    """U(T) obtained by propagating the identity"""
    _check_steps(steps, path.n_samples)
    generator = _schrodinger_generator(path)
    identity = np.eye(path.dim, dtype=complex)
    U_T, _ = integrate_linear(generator, identity, path.period, steps, method)

    error = 0.0
    if estimate_error and steps >= 2:
        coarse, _ = integrate_linear(generator, identity, path.period, steps // 2, method)
        error = float(np.linalg.norm(U_T - coarse)) / 15.0

    logger.info(f"Monodromy over T={path.period:.6g} with {steps} {method} steps, error estimate {error:.3e}")
    return Monodromy(U_T, steps, error)


def exact_cyclic_states(mono: Monodromy, tol: float = EIG_TOL) -> Spectrum:
    """Eigenvectors of U(T) are exactly cyclic; eigenvalues are their total phase factors"""
    return eig_complex(mono.U_T, tol)


def projective_distance(a, b) -> float:
    """Fubini-Study distance arccos(|<a|b>| / (|a||b|)) in [0, pi/2]"""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    if a.shape != b.shape:
        raise DimensionMismatch(f"vectors of dims {a.size} and {b.size}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("projective distance of a zero vector")
    overlap = np.vdot(a, b)
    perpendicular = b - a * (overlap / (na * na))
    return float(np.arctan2(na * np.linalg.norm(perpendicular), abs(overlap)))


class _ReducedSystem:
    """Interpolated coefficients of the reduced ODE on a single-valued frame

    G dC/dt = -i h - (G D + P) C with G_kn = <psi_k|psi_n>, P_kn = <psi_k|dpsi_n>,
    D = diag(i(E_n - E_m + A~_mm)) and h_k = <psi_k|H|phi_m>, indices k, n != m.
    """

    def __init__(self, sp: SystemPath, m: int, order: int = FD_ORDER, overlap_tol: float = OVERLAP_TOL):
        if not 0 <= m < sp.dim:
            raise ValueError(f"mode index {m} out of range for dimension {sp.dim}")
        frame = sp.closed()
        self.frame = frame
        self.mode = m
        self.period = frame.period
        self.size = frame.dim - 1
        others = [n for n in range(frame.dim) if n != m]

        dpsi, dphi = frame_derivatives(frame, order)
        psi = frame.right[:, :, others]
        phi_m = frame.left[:, :, m]
        phi_norm = np.einsum("ki,ki->k", phi_m.conj(), phi_m).real
        a_tilde = 1j * np.einsum("ki,ki->k", phi_m.conj(), dphi[:, :, m]) / phi_norm
        energies = frame.eigenvalues
        self._phase = PeriodicInterpolant(-energies[:, m] + a_tilde, self.period)
        self.drive_scale = 0.0
        if self.size == 0:
            return

        gram = np.einsum("kin,kij->knj", psi.conj(), psi)
        singular = np.linalg.svd(gram, compute_uv=False)[:, -1]
        if singular.min() <= overlap_tol:
            k = int(np.argmin(singular))
            raise OverlapSingular(f"overlap matrix singular at sample {k} (sigma_min={singular[k]:.3e})")

        self._gram = PeriodicInterpolant(gram, self.period)
        self._velocity = PeriodicInterpolant(np.einsum("kin,kij->knj", psi.conj(), dpsi[:, :, others]), self.period)
        self._rates = PeriodicInterpolant(
            1j * (energies[:, others] - energies[:, m][:, None] + a_tilde[:, None]), self.period
        )
        source = np.einsum("kin,kij,kj->kn", psi.conj(), frame.path.samples, phi_m)
        self._source = PeriodicInterpolant(source, self.period)
        self.drive_scale = self.period * float(np.max(np.linalg.norm(source, axis=1)))

    def generator(self, t: np.ndarray) -> np.ndarray:
        """Augmented matrices [[K, f], [0, 0]] so that d[C; 1]/dt = A [C; 1]"""
        t = np.asarray(t, dtype=float)
        n = self.size
        if n == 0:
            return np.zeros(t.shape + (1, 1), dtype=complex)
        gram = self._gram(t)
        rhs = np.concatenate([self._velocity(t), self._source(t)[..., None]], axis=-1)
        solved = np.linalg.solve(gram, rhs)
        out = np.zeros(t.shape + (n + 1, n + 1), dtype=complex)
        out[..., :n, :n] = -solved[..., :n]
        idx = np.arange(n)
        out[..., idx, idx] -= self._rates(t)
        out[..., :n, n] = -1j * solved[..., n]
        return out

    def overall_factor(self, t: np.ndarray) -> np.ndarray:
        """C~(t) = exp(i (delta~_m(t) + gamma~_m(t))) with C~(0) = 1"""
        return np.exp(1j * self._phase.antiderivative(t))


def reduced_ode_solve(sp: SystemPath, m: int, C0, steps: int = DEFAULT_STEPS,
                      method: str = "magnus4") -> ReducedCoefficients:
    """Integrate the off-mode coefficients C~_n(t) and the overall factor C~(t)"""
    _check_steps(steps, sp.n_samples)
    system = _ReducedSystem(sp, m)
    C0 = np.asarray(C0, dtype=complex).reshape(-1)
    if C0.size != system.size:
        raise DimensionMismatch(f"C0 has {C0.size} entries, expected {system.size}")

    y0 = np.concatenate([C0, [1.0 + 0.0j]])
    _, states = integrate_linear(system.generator, y0, system.period, steps, method, record=True)
    times = np.arange(steps + 1) * (system.period / steps)
    return ReducedCoefficients(m, times, states[:, :system.size], system.overall_factor(times))


def periodic_initial_condition(sp: SystemPath, m: int, steps: int = DEFAULT_STEPS, method: str = "magnus4",
                               resonance_tol: float = RESONANCE_TOL) -> PeriodicSolution:
    """Initial C~_n(0) whose reduced solution is T-periodic, from (I - M) C0 = b"""
    _check_steps(steps, sp.n_samples)
    system = _ReducedSystem(sp, m)
    n = system.size
    if n == 0:
        return PeriodicSolution(m, PeriodicStatus.PERIODIC, np.zeros(0, dtype=complex),
                                np.zeros((0, 0), dtype=complex), np.zeros(0, dtype=complex), np.inf)

    # Homogeneous columns and the driven endpoint come out of one augmented propagation
    flow, _ = integrate_linear(system.generator, np.eye(n + 1, dtype=complex), system.period, steps, method)
    M = flow[:n, :n]
    b = flow[:n, n]
    lhs = np.eye(n) - M
    U, sigma, Vh = np.linalg.svd(lhs)
    smallest = float(sigma[-1])
    cutoff = resonance_tol * (1.0 + np.linalg.norm(M, 2))

    if smallest < cutoff:
        if np.linalg.norm(b) <= resonance_tol * (1.0 + system.drive_scale):
            logger.info(f"Mode {m}: every solution is periodic (sigma_min={smallest:.3e})")
            # minimum-norm solution; directions with W(T) = 1 are left at zero
            keep = sigma >= cutoff
            C0 = Vh[keep].conj().T @ ((U[:, keep].conj().T @ b) / sigma[keep])
            return PeriodicSolution(m, PeriodicStatus.ALL_PERIODIC, C0.astype(complex), M, b, smallest)
        raise Resonance(
            f"mode {m}: W(T) = 1 (sigma_min of I - M is {smallest:.3e}) but the drive endpoint "
            f"|b| = {np.linalg.norm(b):.3e} does not vanish, so no periodic solution exists"
        )

    C0 = lu_solve(lhs, b)
    logger.info(f"Mode {m}: periodic initial condition found (sigma_min={smallest:.3e})")
    return PeriodicSolution(m, PeriodicStatus.PERIODIC, C0, M, b, smallest)


def adiabatic_cyclic_state(sp: SystemPath, m: int, C0) -> np.ndarray:
    """psi(0) = sum_{n != m} C~_n(0) psi_n(0) + phi_m(0)"""
    others = [n for n in range(sp.dim) if n != m]
    C0 = np.asarray(C0, dtype=complex).reshape(-1)
    return sp.right[0][:, others] @ C0 + sp.left[0][:, m]


def assess_cyclicity(path: HamiltonianPath, sp: SystemPath, m: int, steps: int = DEFAULT_STEPS,
                     method: str = "rk4", reduced_steps: Optional[int] = None,
                     reduced_method: str = "magnus4",
                     solution: Optional[PeriodicSolution] = None) -> CyclicityAssessment:
    """Propagate the adiabatic cyclic state for one period and compare with the adiabatic prediction"""
    if solution is None:
        solution = periodic_initial_condition(sp, m, reduced_steps or steps, reduced_method)
    frame = sp.closed()
    psi0 = adiabatic_cyclic_state(frame, m, solution.C0)
    trajectory = propagate(path, psi0, steps, method=method)
    psiT = trajectory.final_state

    conn = connection_samples(frame)
    eta = adiabaticity_eta(frame, conn)
    delta = dynamical_phase(frame, m)
    gamma_tilde = geometric_phase_real(frame, m, conn)
    predicted = delta + gamma_tilde

    phi_m = frame.left[0][:, m]
    ratio = np.vdot(phi_m, psiT) / np.vdot(phi_m, psi0)
    measured = complex(nearest_branch(float(np.angle(ratio)), predicted.real), -np.log(abs(ratio)))
    defect = projective_distance(psiT, psi0)

    logger.info(f"Mode {m}: cyclicity defect {defect:.3e}, eta {eta:.3e}")
    return CyclicityAssessment(
        mode_m=m,
        defect=defect,
        eta=eta,
        total_phase=measured,
        predicted_phase=predicted,
        dynamical_phase=delta,
        gamma_tilde=gamma_tilde,
        initial_state=psi0,
        final_state=psiT,
        C0=solution.C0,
        integration_error=trajectory.estimated_error,
    )
