"""
Input validation for CLI runs and sampled-Hamiltonian files
"""

import json
import logging
import math
from typing import Any, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config.settings import DEFAULT_SAMPLES, DEFAULT_STEPS
from services.biorthonormal import HamiltonianPath
from services.errors import ModelParseError
from services.evolution import STEPS_PER_SAMPLE
from services.two_level import TwoLevelParams

logger = logging.getLogger(__name__)

BUILTIN_ONLY = ("two-level", "sweep")


class InputValidator:
    """Input validation utilities"""

    @staticmethod
    def parse_complex(value: Any) -> complex:
        """Accept numbers, "1+0.5j", "1-0.5i" or a [re, im] pair"""
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError("complex pair must be [re, im]")
            z = complex(float(value[0]), float(value[1]))
        elif isinstance(value, str):
            text = value.strip().replace(" ", "")
            if text.endswith("i"):
                text = text[:-1] + "j"
            try:
                z = complex(text)
            except ValueError:
                raise ValueError(f"not a complex number: {value!r}") from None
        else:
            z = complex(value)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError("must be finite")
        return z

    @staticmethod
    def validate_theta(theta: float, allow_endpoints: bool = True) -> Tuple[bool, str]:
        """Polar angle of the precessing field"""
        if not math.isfinite(theta):
            return False, "must be finite"
        if allow_endpoints:
            if not 0.0 <= theta <= math.pi:
                return False, f"must lie in [0, pi], got {theta}"
        elif not 0.0 < theta < math.pi:
            return False, f"must lie in (0, pi) unless endpoint limits are requested, got {theta}"
        return True, ""

    @staticmethod
    def validate_steps(steps: int, samples: int) -> Tuple[bool, str]:
        """Integrator steps against the Hamiltonian samples they interpolate"""
        if steps < STEPS_PER_SAMPLE * samples:
            return False, f"must be at least {STEPS_PER_SAMPLE} * samples = {STEPS_PER_SAMPLE * samples}, got {steps}"
        return True, ""

    @staticmethod
    def validate_grid(low: float, high: float, count: int) -> Tuple[bool, str]:
        if not (math.isfinite(low) and math.isfinite(high)):
            return False, "grid bounds must be finite"
        if count < 1:
            return False, f"count must be at least 1, got {count}"
        if low > high:
            return False, f"min {low} exceeds max {high}"
        if count == 1 and low != high:
            return False, "a single-point grid needs min == max"
        return True, ""


class RunConfig(BaseModel):
    """Validated controls for one nhphase invocation"""
    model_config = ConfigDict(extra="forbid")

    subcommand: Literal["two-level", "sweep", "verify", "floquet"]
    E: complex = 1.0 + 0.0j
    theta: Optional[float] = None
    phi_i: float = 0.0
    omega: Optional[float] = None
    samples: int = Field(DEFAULT_SAMPLES, ge=8)
    steps: int = Field(DEFAULT_STEPS, ge=1)
    mode: Optional[int] = Field(None, ge=1)
    integrator: Literal["rk4", "magnus4"] = "rk4"
    format: Optional[Literal["json", "csv"]] = None
    output: Optional[str] = None
    hamiltonian_file: Optional[str] = None
    with_adiabatic: bool = False
    numeric: bool = False

    @field_validator("E", mode="before")
    @classmethod
    def _parse_energy(cls, value):
        z = InputValidator.parse_complex(value)
        if z == 0:
            raise ValueError("must be nonzero")
        return z

    @field_validator("theta")
    @classmethod
    def _check_theta(cls, value):
        if value is not None:
            ok, message = InputValidator.validate_theta(value)
            if not ok:
                raise ValueError(message)
        return value

    @field_validator("omega")
    @classmethod
    def _check_omega(cls, value):
        if value is not None and not (math.isfinite(value) and value > 0):
            raise ValueError(f"must be positive, got {value}")
        return value

    @field_validator("phi_i")
    @classmethod
    def _check_phi_i(cls, value):
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @model_validator(mode="after")
    def _check_model_source(self):
        if self.hamiltonian_file is not None:
            if self.subcommand in BUILTIN_ONLY:
                raise ValueError(f"hamiltonian_file: not supported by {self.subcommand}")
            if self.theta is not None or self.omega is not None:
                raise ValueError("hamiltonian_file: give exactly one model source, not a file and theta/omega")
            return self
        if self.mode is not None and self.mode > 2:
            raise ValueError(f"mode: the built-in two-level model has modes 1 and 2, got {self.mode}")
        ok, message = InputValidator.validate_steps(self.steps, self.samples)
        if not ok:
            raise ValueError(f"steps: {message}")
        if self.omega is None:
            raise ValueError("omega: required for the built-in two-level model")
        if self.theta is None and self.subcommand != "sweep":
            raise ValueError("theta: required for the built-in two-level model")
        return self

    @property
    def builtin(self) -> bool:
        return self.hamiltonian_file is None

    def params(self, theta: Optional[float] = None, phi_i: Optional[float] = None) -> TwoLevelParams:
        return TwoLevelParams(
            E=self.E,
            theta=self.theta if theta is None else theta,
            phi_i=self.phi_i if phi_i is None else phi_i,
            omega=self.omega,
        )


class SweepSpec(BaseModel):
    """Inclusive (theta, phi_i) grid, theta-major"""
    model_config = ConfigDict(extra="forbid")

    theta_min: float = math.pi / 6
    theta_max: float = 5 * math.pi / 6
    theta_count: int = Field(5, ge=1)
    phi_i_min: float = -0.5
    phi_i_max: float = 0.5
    phi_i_count: int = Field(5, ge=1)
    allow_endpoints: bool = False

    @model_validator(mode="after")
    def _check_grid(self):
        for name in ("theta", "phi_i"):
            low, high = getattr(self, f"{name}_min"), getattr(self, f"{name}_max")
            ok, message = InputValidator.validate_grid(low, high, getattr(self, f"{name}_count"))
            if not ok:
                raise ValueError(f"{name}: {message}")
        for bound in (self.theta_min, self.theta_max):
            ok, message = InputValidator.validate_theta(bound, self.allow_endpoints)
            if not ok:
                raise ValueError(f"theta: {message}")
        return self

    def thetas(self) -> np.ndarray:
        return np.linspace(self.theta_min, self.theta_max, self.theta_count)

    def phi_is(self) -> np.ndarray:
        return np.linspace(self.phi_i_min, self.phi_i_max, self.phi_i_count)

    def points(self) -> List[Tuple[float, float]]:
        return [(float(t), float(p)) for t in self.thetas() for p in self.phi_is()]


def describe_validation_error(error: ValidationError) -> str:
    """One line per failing field, e.g. "omega: required for ..." """
    parts = []
    for item in error.errors():
        field = ".".join(str(x) for x in item.get("loc", ()))
        message = item.get("msg", "invalid")
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        parts.append(f"{field}: {message}" if field else message)
    return "; ".join(parts)


def _parse_entry(entry: Any, where: str) -> complex:
    if isinstance(entry, (list, tuple)):
        if len(entry) != 2 or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry):
            raise ModelParseError(f"{where}: expected [re, im] number pair")
        return complex(entry[0], entry[1])
    if isinstance(entry, (int, float)) and not isinstance(entry, bool):
        return complex(entry)
    raise ModelParseError(f"{where}: expected a number or [re, im] pair")


def _parse_sample(sample: Any, k: int) -> np.ndarray:
    if not isinstance(sample, list) or not sample:
        raise ModelParseError(f"samples[{k}]: expected a non-empty matrix")
    if all(isinstance(row, list) and row and isinstance(row[0], list) for row in sample):
        rows = [[_parse_entry(x, f"samples[{k}][{i}][{j}]") for j, x in enumerate(row)]
                for i, row in enumerate(sample)]
        if any(len(row) != len(rows) for row in rows):
            raise ModelParseError(f"samples[{k}]: matrix is not square")
        return np.array(rows, dtype=complex)
    # flat row-major list of d^2 entries
    flat = [_parse_entry(x, f"samples[{k}][{i}]") for i, x in enumerate(sample)]
    d = int(round(math.sqrt(len(flat))))
    if d * d != len(flat):
        raise ModelParseError(f"samples[{k}]: {len(flat)} entries do not form a square matrix")
    return np.array(flat, dtype=complex).reshape(d, d)


def parse_hamiltonian(text: str) -> HamiltonianPath:
    """{"period": T, "samples": [matrix, ...]} with matrices of [re, im] entries"""
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelParseError(f"invalid JSON: {e.msg}", e.lineno, e.colno) from None

    if not isinstance(document, dict):
        raise ModelParseError("top level must be an object with 'period' and 'samples'")
    missing = [key for key in ("period", "samples") if key not in document]
    if missing:
        raise ModelParseError(f"missing key(s): {', '.join(missing)}")
    period = document["period"]
    if not isinstance(period, (int, float)) or isinstance(period, bool):
        raise ModelParseError("period must be a number")
    samples = document["samples"]
    if not isinstance(samples, list):
        raise ModelParseError("samples must be a list of matrices")

    matrices = [_parse_sample(sample, k) for k, sample in enumerate(samples)]
    if not matrices:
        raise ModelParseError("samples is empty")
    if len({m.shape for m in matrices}) > 1:
        raise ModelParseError("samples have differing dimensions")
    try:
        return HamiltonianPath(float(period), np.stack(matrices))
    except (ValueError, IndexError) as e:
        raise ModelParseError(str(e)) from None


def load_hamiltonian_file(path: str) -> HamiltonianPath:
    """Read a sampled Hamiltonian; OSError propagates for I/O failures"""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    model = parse_hamiltonian(text)
    logger.info(f"Loaded {model.n_samples} samples of a {model.dim}x{model.dim} Hamiltonian from {path}")
    return model
