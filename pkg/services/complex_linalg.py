"""
Dense complex linear algebra for small systems
"""

import logging
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.linalg import LinAlgWarning, hessenberg, lu_factor
from scipy.linalg import lu_solve as _lu_solve_factored

from config.settings import EIG_SWEEPS_PER_DIM, EIG_TOL, NHPHASE_SEED, PIVOT_TOL
from services.errors import DimensionMismatch, EigNoConvergence, EmptyMatrix, SingularMatrix

logger = logging.getLogger(__name__)

# Plain numpy arrays carry every complex quantity; the aliases document intent.
ComplexVector = np.ndarray
ComplexMatrix = np.ndarray

_EPS = np.finfo(float).eps
_EXCEPTIONAL_SHIFT_EVERY = 10


@dataclass
class Spectrum:
    """Eigenvalues with unit-norm right eigenvectors stored as columns"""
    eigenvalues: np.ndarray
    vectors: np.ndarray
    max_residual: float = 0.0

    def __len__(self) -> int:
        return len(self.eigenvalues)


def as_vector(v, name: str = "vector") -> ComplexVector:
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_matrix(A, name: str = "matrix") -> ComplexMatrix:
    arr = np.asarray(A, dtype=complex)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _square(A, name: str = "matrix") -> ComplexMatrix:
    arr = as_matrix(A, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    return arr


def norm(A) -> float:
    """Frobenius norm (Euclidean norm for vectors)"""
    return float(np.linalg.norm(np.asarray(A, dtype=complex)))


def inner(a, b) -> complex:
    """<a|b>, conjugate-linear in the first slot"""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    if a.shape != b.shape:
        raise DimensionMismatch(f"inner product of dims {a.size} and {b.size}")
    return complex(np.vdot(a, b))


def adjoint(A) -> ComplexMatrix:
    return as_matrix(A).conj().T


def matmul(A, B) -> ComplexMatrix:
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatch(f"cannot multiply {A.shape} by {B.shape}")
    return A @ B


def matvec(A, v) -> ComplexVector:
    A = as_matrix(A, "A")
    v = as_vector(v, "v")
    if A.shape[1] != v.size:
        raise DimensionMismatch(f"cannot apply {A.shape} matrix to dim {v.size} vector")
    return A @ v


def _factor(A: ComplexMatrix, pivot_tol: float):
    """LU with partial pivoting; raises SingularMatrix on a negligible pivot"""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if scale == 0.0 or pivots.min() <= pivot_tol * scale * A.shape[0]:
        raise SingularMatrix(
            f"pivot {pivots.min():.3e} below tolerance (scale {scale:.3e})"
        )
    return lu, piv


def lu_solve(A, b, pivot_tol: float = PIVOT_TOL) -> ComplexVector:
    """Solve A x = b by LU factorisation with partial pivoting"""
    A = _square(A, "A")
    b = np.asarray(b, dtype=complex)
    if A.shape[0] == 0:
        raise EmptyMatrix("cannot solve an empty system")
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"right-hand side has {b.shape[0]} rows, matrix has {A.shape[0]}")
    if not np.all(np.isfinite(b)):
        raise ValueError("b has non-finite entries")
    lu, piv = _factor(A, pivot_tol)
    return _lu_solve_factored((lu, piv), b, check_finite=False)


def _eig_2x2(block: np.ndarray):
    a, b = block[0, 0], block[0, 1]
    c, d = block[1, 0], block[1, 1]
    mean = 0.5 * (a + d)
    disc = np.sqrt((0.5 * (a - d)) ** 2 + b * c)
    # Pick the larger-modulus root first, recover the other from the determinant
    lam1 = mean + disc if abs(mean + disc) >= abs(mean - disc) else mean - disc
    det = a * d - b * c
    lam2 = det / lam1 if lam1 != 0 else mean - disc
    return [complex(lam1), complex(lam2)]


def _wilkinson_shift(block: np.ndarray) -> complex:
    lam1, lam2 = _eig_2x2(block)
    corner = block[1, 1]
    return lam1 if abs(lam1 - corner) <= abs(lam2 - corner) else lam2


def _qr_eigenvalues(A: ComplexMatrix, max_sweeps: int) -> np.ndarray:
    """Eigenvalues by Hessenberg reduction and single-shift QR with deflation"""
    n = A.shape[0]
    H = np.array(hessenberg(A), dtype=complex)
    anorm = norm(H)
    eigenvalues: List[complex] = []
    hi = n - 1
    sweeps = 0
    since_deflation = 0

    while hi >= 0:
        if hi == 0:
            eigenvalues.append(complex(H[0, 0]))
            break

        lo = hi
        while lo > 0:
            thresh = _EPS * max(abs(H[lo, lo]) + abs(H[lo - 1, lo - 1]), 1e-3 * anorm)
            if abs(H[lo, lo - 1]) <= thresh:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1

        if lo == hi:
            eigenvalues.append(complex(H[hi, hi]))
            hi -= 1
            since_deflation = 0
            continue
        if lo == hi - 1:
            eigenvalues.extend(_eig_2x2(H[hi - 1:hi + 1, hi - 1:hi + 1]))
            hi -= 2
            since_deflation = 0
            continue

        if sweeps >= max_sweeps:
            raise EigNoConvergence(f"QR iteration did not converge after {sweeps} sweeps (n={n})")

        if since_deflation and since_deflation % _EXCEPTIONAL_SHIFT_EVERY == 0:
            shift = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
            logger.debug(f"Exceptional shift at sweep {sweeps}, window [{lo}, {hi}]")
        else:
            shift = _wilkinson_shift(H[hi - 1:hi + 1, hi - 1:hi + 1])

        window = slice(lo, hi + 1)
        size = hi - lo + 1
        Q, R = np.linalg.qr(H[window, window] - shift * np.eye(size))
        block = R @ Q + shift * np.eye(size)
        H[window, window] = np.triu(block, -1)
        sweeps += 1
        since_deflation += 1

    return np.array(eigenvalues, dtype=complex)


def _normalize_phase(v: ComplexVector) -> ComplexVector:
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def _shift_offset(eigenvalues: np.ndarray, k: int, anorm: float) -> float:
    """Shift perturbation, kept well inside the gap to the nearest distinct eigenvalue"""
    gaps = np.abs(np.delete(eigenvalues, k) - eigenvalues[k])
    gaps = gaps[gaps > 0]
    delta = 1e-12 * anorm
    if gaps.size:
        delta = min(delta, 1e-3 * float(gaps.min()))
    return max(delta, 4.0 * _EPS * anorm)


def _inverse_iteration(A: ComplexMatrix, lam: complex, cluster: List[ComplexVector], offset: float,
                       limit: float, rng: np.random.Generator) -> Optional[ComplexVector]:
    n = A.shape[0]
    starts = [np.ones(n, dtype=complex) / np.sqrt(n)]
    # One re-randomised retry on stagnation
    starts.append(rng.standard_normal(n) + 1j * rng.standard_normal(n))

    for attempt, start in enumerate(starts):
        x = start.copy()
        for u in cluster:
            x -= np.vdot(u, x) * u
        if np.linalg.norm(x) <= 1e-8 * np.linalg.norm(start):
            continue
        x /= np.linalg.norm(x)

        delta = offset
        factors = None
        while factors is None:
            try:
                factors = _factor(A - (lam + delta) * np.eye(n), 0.0)
            except SingularMatrix:
                delta *= 1000.0

        for it in range(3):
            x = _lu_solve_factored(factors, x, check_finite=False)
            for u in cluster:
                x -= np.vdot(u, x) * u
            size = np.linalg.norm(x)
            if not np.isfinite(size) or size == 0.0:
                break
            x /= size
            if it >= 1 and np.linalg.norm(A @ x - lam * x) <= limit:
                return _normalize_phase(x)

        if attempt == 0:
            logger.debug(f"Inverse iteration stagnated for eigenvalue {lam:.6g}, retrying from random start")

    return None


def eig_complex(A, tol: float = EIG_TOL, seed: int = NHPHASE_SEED,
                max_sweeps_per_dim: int = EIG_SWEEPS_PER_DIM) -> Spectrum:
    """General complex eigensolver: shifted QR for eigenvalues, inverse iteration for vectors"""
    A = _square(A, "A")
    n = A.shape[0]
    if n == 0:
        raise EmptyMatrix("eigenvalues of an empty matrix")

    anorm = norm(A)
    if anorm == 0.0:
        return Spectrum(np.zeros(n, dtype=complex), np.eye(n, dtype=complex), 0.0)

    eigenvalues = _qr_eigenvalues(A, max_sweeps_per_dim * n)
    order = np.lexsort((eigenvalues.imag, eigenvalues.real))
    eigenvalues = eigenvalues[order]

    limit = tol * anorm
    rng = np.random.default_rng(seed)
    vectors = np.empty((n, n), dtype=complex)
    residuals = np.empty(n)

    for k, lam in enumerate(eigenvalues):
        cluster = [vectors[:, j] for j in range(k)
                   if abs(eigenvalues[j] - lam) <= 1e-10 * anorm]
        offset = _shift_offset(eigenvalues, k, anorm)
        v = _inverse_iteration(A, lam, cluster, offset, limit, rng)
        if v is None and cluster:
            # near-defective pairs have nearly parallel eigenvectors
            logger.debug(f"Orthogonalised vector missed tolerance for eigenvalue {lam:.6g}, iterating unconstrained")
            v = _inverse_iteration(A, lam, [], offset, limit, rng)
        if v is None:
            raise EigNoConvergence(f"no eigenvector within tolerance for eigenvalue {lam:.6g}")
        vectors[:, k] = v
        residuals[k] = np.linalg.norm(A @ v - lam * v)

    return Spectrum(eigenvalues, vectors, float(residuals.max()))
