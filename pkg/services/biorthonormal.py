"""
Biorthonormal eigensystems of non-Hermitian Hamiltonians and their continuation along closed paths
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List

import numpy as np
from scipy.optimize import linear_sum_assignment

from config.settings import DEGENERACY_TOL, EIG_TOL, PAIRING_TOL
from services.complex_linalg import ComplexMatrix, as_matrix, eig_complex, norm
from services.errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    PairingAmbiguous,
    TrackingAmbiguous,
)

logger = logging.getLogger(__name__)

MIN_SAMPLES = 8


@dataclass
class BiorthonormalSystem:
    """Paired eigenvalues E_n, right vectors psi_n and left vectors phi_n (columns)"""
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def overlaps(self) -> np.ndarray:
        """Matrix of <phi_m|psi_n>"""
        return self.left.conj().T @ self.right

    def biorthonormality_defect(self) -> float:
        return float(np.max(np.abs(self.overlaps() - np.eye(self.dim))))

    def rescaled(self, n: int, c: complex) -> "BiorthonormalSystem":
        """Gauge change psi_n -> c psi_n, phi_n -> phi_n / conj(c)"""
        if c == 0:
            raise ValueError("gauge factor must be nonzero")
        right = self.right.copy()
        left = self.left.copy()
        right[:, n] *= c
        left[:, n] /= np.conj(c)
        return BiorthonormalSystem(self.eigenvalues.copy(), right, left)


@dataclass
class HamiltonianPath:
    """Closed, uniformly sampled loop t -> H(t) with t_k = k T / N"""
    period: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if not np.isfinite(self.period) or self.period <= 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if self.samples.ndim != 3 or self.samples.shape[1] != self.samples.shape[2]:
            raise DimensionMismatch(f"samples must have shape (N, d, d), got {self.samples.shape}")
        if self.samples.shape[0] < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples, got {self.samples.shape[0]}")
        if self.samples.shape[1] == 0:
            raise DimensionMismatch("samples must be at least 1x1")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples have non-finite entries")

    @classmethod
    def from_function(cls, hamiltonian: Callable[[float], ComplexMatrix], period: float,
                      n_samples: int) -> "HamiltonianPath":
        times = np.arange(n_samples) * (period / n_samples)
        return cls(period, np.array([hamiltonian(t) for t in times]))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def step(self) -> float:
        return self.period / self.n_samples

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.step

    def scale(self) -> float:
        """Largest Frobenius norm over the samples"""
        return float(np.max(np.linalg.norm(self.samples, axis=(1, 2))))


@dataclass
class SystemPath:
    """Label-tracked, gauge-smoothed eigensystems aligned with a HamiltonianPath

    The frame stored here is continuous from sample to sample.  Continuing it
    past the last sample gives psi_n(T) = exp(i holonomy_n) psi_n(0); `closed()`
    removes that mismatch with a linear phase ramp.
    """
    path: HamiltonianPath
    eigenvalues: np.ndarray            # (N, d)
    right: np.ndarray                  # (N, d, d), columns are modes
    left: np.ndarray                   # (N, d, d)
    holonomy: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.holonomy is None:
            self.holonomy = np.zeros(self.dim)

    @classmethod
    def from_frames(cls, path: HamiltonianPath, eigenvalues, right, left) -> "SystemPath":
        """Wrap an externally supplied single-valued frame (e.g. an analytic one)"""
        eigenvalues = np.asarray(eigenvalues, dtype=complex)
        right = np.asarray(right, dtype=complex)
        left = np.asarray(left, dtype=complex)
        expected = (path.n_samples, path.dim, path.dim)
        if right.shape != expected or left.shape != expected:
            raise DimensionMismatch(f"frames must have shape {expected}")
        return cls(path, eigenvalues, right, left, np.zeros(path.dim))

    @property
    def period(self) -> float:
        return self.path.period

    @property
    def n_samples(self) -> int:
        return self.path.n_samples

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.path.times

    @property
    def systems(self) -> List[BiorthonormalSystem]:
        return [self.system(k) for k in range(self.n_samples)]

    def system(self, k: int) -> BiorthonormalSystem:
        return BiorthonormalSystem(self.eigenvalues[k], self.right[k], self.left[k])

    @property
    def is_single_valued(self) -> bool:
        return bool(np.all(self.holonomy == 0))

    def closed(self) -> "SystemPath":
        """Single-valued frame: multiply mode n by exp(-i holonomy_n t / T)"""
        if self.is_single_valued:
            return self
        ramp = np.exp(-1j * np.outer(self.times / self.period, self.holonomy))  # (N, d)
        return replace(
            self,
            right=self.right * ramp[:, None, :],
            left=self.left * ramp[:, None, :],
            holonomy=np.zeros(self.dim),
        )

    def biorthonormality_defect(self) -> float:
        overlaps = np.einsum("kim,kin->kmn", self.left.conj(), self.right)
        return float(np.max(np.abs(overlaps - np.eye(self.dim))))


def completeness_defect(system: BiorthonormalSystem) -> float:
    """|| sum_n |psi_n><phi_n| - I ||_F"""
    resolution = system.right @ system.left.conj().T
    return float(np.linalg.norm(resolution - np.eye(system.dim)))


def _min_gap(eigenvalues: np.ndarray) -> float:
    if len(eigenvalues) < 2:
        return np.inf
    diffs = np.abs(eigenvalues[:, None] - eigenvalues[None, :])
    diffs[np.diag_indices_from(diffs)] = np.inf
    return float(diffs.min())


def build_system(H, tol: float = EIG_TOL, degeneracy_tol: float = DEGENERACY_TOL,
                 pairing_tol: float = PAIRING_TOL) -> BiorthonormalSystem:
    """Right eigenvectors of H paired with left eigenvectors from H^dagger"""
    H = as_matrix(H, "H")
    scale = max(1.0, norm(H))

    right_spec = eig_complex(H, tol)
    energies = right_spec.eigenvalues
    gap = _min_gap(energies)
    if gap <= degeneracy_tol * scale:
        raise DegenerateSpectrum(f"minimum spectral gap {gap:.3e} below {degeneracy_tol * scale:.3e}")

    left_spec = eig_complex(H.conj().T, tol)
    candidates = np.conj(left_spec.eigenvalues)

    n = len(energies)
    distance = np.abs(energies[:, None] - candidates[None, :])
    match = np.empty(n, dtype=int)
    for i in range(n):
        order = np.argsort(distance[i], kind="stable")
        match[i] = order[0]
        if n > 1 and distance[i, order[1]] - distance[i, order[0]] <= pairing_tol * scale:
            raise PairingAmbiguous(f"eigenvalue {energies[i]:.6g} has two conjugate candidates")
    if len(set(match.tolist())) != n:
        raise PairingAmbiguous("left/right eigenvalue pairing is not one-to-one")

    right = right_spec.vectors
    left = left_spec.vectors[:, match].copy()
    for i in range(n):
        s = np.vdot(left[:, i], right[:, i])
        if abs(s) <= pairing_tol:
            raise PairingAmbiguous(f"left and right vectors of {energies[i]:.6g} are orthogonal")
        left[:, i] /= np.conj(s)

    return BiorthonormalSystem(energies, right, left)


def _check_swaps(cost: np.ndarray, cols: np.ndarray, threshold: float, sample: int):
    """Near-tie test: no pairwise exchange of the optimal assignment may cost within threshold"""
    optimum = cost[np.arange(len(cols)), cols].sum()
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            swapped = optimum - cost[i, cols[i]] - cost[j, cols[j]] + cost[i, cols[j]] + cost[j, cols[i]]
            if swapped - optimum <= threshold:
                raise TrackingAmbiguous(
                    f"sample {sample}: labels {i} and {j} are indistinguishable by eigenvalue distance"
                )


def build_system_path(path: HamiltonianPath, tol: float = EIG_TOL,
                      degeneracy_tol: float = DEGENERACY_TOL,
                      pairing_tol: float = PAIRING_TOL) -> SystemPath:
    """Eigensystems along the loop with continuous labels and gauge"""
    N, d = path.n_samples, path.dim
    threshold = pairing_tol * max(1.0, path.scale())
    eigenvalues = np.empty((N, d), dtype=complex)
    right = np.empty((N, d, d), dtype=complex)
    left = np.empty((N, d, d), dtype=complex)

    for k in range(N):
        try:
            system = build_system(path.samples[k], tol, degeneracy_tol, pairing_tol)
        except DegenerateSpectrum as e:
            raise DegenerateSpectrum(str(e), sample=k) from e
        except PairingAmbiguous as e:
            raise PairingAmbiguous(str(e), sample=k) from e

        E, psi, phi = system.eigenvalues, system.right, system.left
        if k > 0:
            cost = np.abs(eigenvalues[k - 1][:, None] - E[None, :])
            rows, cols = linear_sum_assignment(cost)
            if d > 1:
                _check_swaps(cost, cols, threshold, k)
            E, psi, phi = E[cols], psi[:, cols], phi[:, cols]

            # unit phase making <psi_n(t_{k-1})|psi_n(t_k)> real and nonnegative
            overlap = np.einsum("in,in->n", right[k - 1].conj(), psi)
            size = np.abs(overlap)
            unit = np.where(size > 0, np.conj(overlap) / np.where(size > 0, size, 1.0), 1.0)
            psi = psi * unit[None, :]
            phi = phi * unit[None, :]

        eigenvalues[k], right[k], left[k] = E, psi, phi

    if d > 1:
        cost = np.abs(eigenvalues[-1][:, None] - eigenvalues[0][None, :])
        _, cols = linear_sum_assignment(cost)
        if not np.array_equal(cols, np.arange(d)):
            raise TrackingAmbiguous("eigenvalue labels are permuted after one period")

    closing = np.einsum("in,in->n", right[-1].conj(), right[0])
    holonomy = np.angle(np.conj(closing))
    logger.info(f"Built system path: N={N}, d={d}, holonomy={np.round(holonomy, 6).tolist()}")
    return SystemPath(path, eigenvalues, right, left, holonomy)
