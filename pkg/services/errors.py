"""
Exception hierarchy for the numerical services
"""

from typing import Optional


class NHPhaseError(Exception):
    """Base class for all nhphase failures"""


class DimensionMismatch(NHPhaseError, ValueError):
    pass


class EmptyMatrix(NHPhaseError, ValueError):
    pass


class SingularMatrix(NHPhaseError):
    pass


class EigNoConvergence(NHPhaseError):
    pass


class DegenerateSpectrum(NHPhaseError):
    def __init__(self, message: str, sample: Optional[int] = None):
        if sample is not None:
            message = f"sample {sample}: {message}"
        super().__init__(message)
        self.sample = sample


class PairingAmbiguous(NHPhaseError):
    def __init__(self, message: str, sample: Optional[int] = None):
        if sample is not None:
            message = f"sample {sample}: {message}"
        super().__init__(message)
        self.sample = sample


class TrackingAmbiguous(NHPhaseError):
    pass


class RealnessViolation(NHPhaseError):
    pass


class StepCountTooSmall(NHPhaseError, ValueError):
    pass


class UnstableEvolution(NHPhaseError):
    pass


class OverlapSingular(NHPhaseError):
    pass


class Resonance(NHPhaseError):
    """No periodic solution: W(T) = 1 with a non-vanishing drive endpoint"""


class ModelParseError(NHPhaseError):
    """Malformed sampled-Hamiltonian file"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column
