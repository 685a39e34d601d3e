"""
Subcommand handlers for the nhphase command line
"""

import asyncio
import logging
import math
import sys
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from config.settings import (
    ADIABATIC_ETA_LIMIT,
    ASYNC_WORKERS,
    MAX_PHASE_STEP,
    VERIFY_DEFECT_FACTOR,
)
from services.biorthonormal import HamiltonianPath, SystemPath, build_system_path
from services.errors import ModelParseError, NHPhaseError, Resonance
from services.evolution import (
    PeriodicStatus,
    adiabatic_cyclic_state,
    assess_cyclicity,
    exact_cyclic_states,
    monodromy,
    periodic_initial_condition,
    projective_distance,
)
from services.phases import adiabaticity_eta, connection_samples, nearest_branch, phase_report
from services.two_level import (
    MODES,
    TwoLevelParams,
    closed_form_eta,
    hamiltonian_path,
    mode_index,
    solve_two_level,
    to_analytic_gauge,
)
from utils.formatters import angle_entry, format_csv, format_json, format_report, write_output
from utils.validators import (
    InputValidator,
    RunConfig,
    SweepSpec,
    describe_validation_error,
    load_hamiltonian_file,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_RESONANCE = 4
EXIT_PARSE = 5

SWEEP_COLUMNS = [
    "theta", "phi_i", "gamma1", "gamma2", "gamma_tilde1", "gamma_tilde2",
    "eta", "c1_0_re", "c1_0_im", "resonance",
]
SWEEP_GRID_KEYS = (
    "theta_min", "theta_max", "theta_count",
    "phi_i_min", "phi_i_max", "phi_i_count", "allow_endpoints",
)


def effective_steps(path: HamiltonianPath, requested: int) -> int:
    """Raise the step count until T * max||H|| / steps <= MAX_PHASE_STEP, in whole multiples of N"""
    spectral = float(np.max(np.linalg.norm(path.samples, ord=2, axis=(1, 2))))
    needed = math.ceil(path.period * spectral / MAX_PHASE_STEP)
    if needed <= requested:
        return requested
    n = path.n_samples
    raised = n * math.ceil(needed / n)
    logger.warning(f"Raised integrator steps from {requested} to {raised} (T*||H|| = {path.period * spectral:.4g})")
    return raised


def _parameters(p: TwoLevelParams) -> Dict[str, Any]:
    return {"E": p.E, "theta": p.theta, "phi_i": p.phi_i, "omega": p.omega, "period": p.period}


class CLIHandlers:
    """One method per subcommand; each returns a serialisable report"""

    def __init__(self, workers: int = ASYNC_WORKERS):
        self.workers = max(1, workers)

    def _model(self, config: RunConfig) -> Tuple[HamiltonianPath, Optional[TwoLevelParams]]:
        if config.builtin:
            p = config.params()
            return hamiltonian_path(p, config.samples), p
        path = load_hamiltonian_file(config.hamiltonian_file)
        ok, message = InputValidator.validate_steps(config.steps, path.n_samples)
        if not ok:
            raise ValueError(f"steps: {message}")
        return path, None

    @staticmethod
    def _mode_column(sp: SystemPath, p: Optional[TwoLevelParams], mode: int) -> int:
        if p is not None:
            return mode_index(sp, p, mode)
        if mode > sp.dim:
            raise ValueError(f"mode: model has {sp.dim} modes, got {mode}")
        return mode - 1

    @staticmethod
    def _mode_labels(sp: SystemPath, p: Optional[TwoLevelParams]) -> List[int]:
        return list(MODES) if p is not None else list(range(1, sp.dim + 1))

    def _closed_form_section(self, p: TwoLevelParams) -> Dict[str, Any]:
        solution = solve_two_level(p)
        g1, g2, gt1, gt2 = solution.phases
        return {
            "gamma1": angle_entry(g1),
            "gamma2": angle_entry(g2),
            "gamma_tilde1": angle_entry(gt1),
            "gamma_tilde2": angle_entry(gt2),
            "delta1": complex(p.E * p.period),
            "delta2": complex(-p.E * p.period),
            "eta": closed_form_eta(p),
            "Q": solution.Q,
            "drive0": solution.drive,
            "W_T": solution.W_T,
            "c1_0": solution.C1_0.value,
            "c1_0_status": solution.C1_0.status.value,
            "c2_0": solution.C2_0.value,
            "c2_0_status": solution.C2_0.status.value,
        }

    def _numeric_section(self, p: TwoLevelParams, config: RunConfig, closed: Dict[str, Any],
                         modes: Tuple[int, ...] = MODES) -> Dict[str, Any]:
        sp = build_system_path(hamiltonian_path(p, config.samples))
        conn = connection_samples(sp)
        section: Dict[str, Any] = {}
        for mode in modes:
            m = mode_index(sp, p, mode)
            report = phase_report(sp, m, conn)
            gamma_ref = closed[f"gamma{mode}"]["unwrapped"]
            tilde_ref = closed[f"gamma_tilde{mode}"]["unwrapped"]
            gamma = complex(nearest_branch(report.gamma.real, gamma_ref), report.gamma.imag)
            section[f"gamma{mode}"] = angle_entry(gamma)
            section[f"gamma_tilde{mode}"] = angle_entry(nearest_branch(report.gamma_tilde, tilde_ref))
            section[f"delta{mode}"] = report.delta
            section[f"relation_residual{mode}"] = report.relation_residual
            section[f"realness_defect{mode}"] = report.realness_defect
            section[f"holonomy{mode}"] = report.holonomy_compensation.real
            section["eta"] = report.eta

        # the cyclic state built on phi_2 carries C~_1(0), the one on phi_1 carries C~_2(0)
        for mode, other in ((2, 1), (1, 2)):
            if mode not in modes:
                continue
            key = f"c{other}_0"
            try:
                solution = periodic_initial_condition(sp, mode_index(sp, p, mode), config.steps)
            except Resonance as e:
                logger.warning(f"{key}: {e}")
                section[key], section[f"{key}_status"] = None, PeriodicStatus.RESONANCE.value
                continue
            section[key] = to_analytic_gauge(p, sp, mode, solution.C0[0])
            section[f"{key}_status"] = solution.status.value
        return section

    def _two_level_report(self, config: RunConfig) -> Dict[str, Any]:
        p = config.params()
        closed = self._closed_form_section(p)
        modes = MODES if config.mode is None else (config.mode,)
        return {
            "subcommand": "two-level",
            "parameters": _parameters(p),
            "controls": {"samples": config.samples, "steps": config.steps},
            "modes": list(modes),
            "closed_form": closed,
            "numeric": self._numeric_section(p, config, closed, modes),
        }

    async def cmd_two_level(self, config: RunConfig) -> Dict[str, Any]:
        """Closed-form and numeric phases of the precessing model side by side"""
        logger.info(f"two-level: theta={config.theta}, phi_i={config.phi_i}, omega={config.omega}")
        return await asyncio.to_thread(self._two_level_report, config)

    def _sweep_row(self, config: RunConfig, theta: float, phi_i: float) -> Dict[str, Any]:
        p = config.params(theta=theta, phi_i=phi_i)
        solution = solve_two_level(p)
        g1, g2, gt1, gt2 = solution.phases
        row = {"theta": theta, "phi_i": phi_i, "gamma1": g1, "gamma2": g2,
               "gamma_tilde1": gt1, "gamma_tilde2": gt2, "eta": closed_form_eta(p)}
        c1 = solution.C1_0

        if config.numeric:
            numeric = self._numeric_section(p, config, self._closed_form_section(p))
            for key in ("gamma1", "gamma2", "gamma_tilde1", "gamma_tilde2"):
                row[key] = complex(numeric[key]["unwrapped"]).real
            row["eta"] = numeric["eta"]
            value, status = numeric["c1_0"], PeriodicStatus(numeric["c1_0_status"])
        else:
            value, status = c1.value, c1.status

        resonance = status == PeriodicStatus.RESONANCE
        row["c1_0_re"] = None if value is None else complex(value).real
        row["c1_0_im"] = None if value is None else complex(value).imag
        row["resonance"] = resonance
        return row

    async def cmd_sweep(self, config: RunConfig, spec: SweepSpec) -> List[Dict[str, Any]]:
        """Rows over the (theta, phi_i) grid in theta-major order"""
        points = spec.points()
        logger.info(f"sweep: {len(points)} grid points, numeric={config.numeric}")
        rows: List[Dict[str, Any]] = []
        for start in range(0, len(points), self.workers):
            batch = points[start:start + self.workers]
            rows.extend(await asyncio.gather(
                *(asyncio.to_thread(self._sweep_row, config, theta, phi_i) for theta, phi_i in batch)
            ))
        return rows

    def _verify_report(self, config: RunConfig) -> Dict[str, Any]:
        path, p = self._model(config)
        sp = build_system_path(path)
        mode = config.mode or (2 if p is not None else 1)
        m = self._mode_column(sp, p, mode)
        steps = effective_steps(path, config.steps)

        solution = periodic_initial_condition(sp, m, config.steps)
        assessment = assess_cyclicity(path, sp, m, steps, method=config.integrator, solution=solution)

        threshold = VERIFY_DEFECT_FACTOR * max(assessment.eta, assessment.integration_error)
        verdict = "PASS" if assessment.defect <= threshold else "FAIL"
        regime = "adiabatic regime violated" if assessment.eta >= ADIABATIC_ETA_LIMIT else "adiabatic"
        if verdict == "FAIL":
            logger.warning(f"verify: defect {assessment.defect:.3e} exceeds {threshold:.3e} ({regime})")

        report: Dict[str, Any] = {
            "subcommand": "verify",
            "parameters": _parameters(p) if p is not None else {"period": path.period, "dim": path.dim},
            "controls": {"samples": path.n_samples, "steps": steps, "integrator": config.integrator},
            "mode": mode,
            "verdict": verdict,
            "regime": regime,
            "defect": assessment.defect,
            "eta": assessment.eta,
            "defect_ratio": assessment.defect_ratio,
            "threshold": threshold,
            "measured_total_phase": angle_entry(assessment.total_phase),
            "predicted_total_phase": angle_entry(assessment.predicted_phase),
            "dynamical_phase": assessment.dynamical_phase,
            "measured_geometric": angle_entry(assessment.measured_geometric),
            "predicted_geometric": angle_entry(assessment.gamma_tilde),
            "periodic_status": solution.status.value,
            "C0": solution.C0,
            "integration_error": assessment.integration_error,
        }
        if p is not None:
            report["closed_form_eta"] = closed_form_eta(p)
        return report

    async def cmd_verify(self, config: RunConfig) -> Dict[str, Any]:
        """Propagate the adiabatic cyclic state over one period and grade its cyclicity"""
        return await asyncio.to_thread(self._verify_report, config)

    def _adiabatic_distances(self, config: RunConfig, path: HamiltonianPath, p: Optional[TwoLevelParams],
                             vectors: np.ndarray) -> List[Dict[str, Any]]:
        sp = build_system_path(path)
        eta = adiabaticity_eta(sp)
        frame = sp.closed()
        entries = []
        for mode in self._mode_labels(sp, p):
            m = self._mode_column(sp, p, mode)
            entry: Dict[str, Any] = {"mode": mode, "eta": eta}
            try:
                solution = periodic_initial_condition(sp, m, config.steps)
            except Resonance as e:
                logger.warning(f"floquet: mode {mode} has no adiabatic cyclic state: {e}")
                entry.update({"status": PeriodicStatus.RESONANCE.value, "distances": None,
                              "nearest": None, "nearest_distance": None})
                entries.append(entry)
                continue
            psi0 = adiabatic_cyclic_state(frame, m, solution.C0)
            distances = [projective_distance(vectors[:, j], psi0) for j in range(vectors.shape[1])]
            nearest = int(np.argmin(distances))
            entry.update({"status": solution.status.value, "distances": distances,
                          "nearest": nearest, "nearest_distance": distances[nearest]})
            entries.append(entry)
        return entries

    def _floquet_report(self, config: RunConfig) -> Dict[str, Any]:
        path, p = self._model(config)
        steps = effective_steps(path, config.steps)
        mono = monodromy(path, steps, method=config.integrator)
        spectrum = exact_cyclic_states(mono)
        vectors = spectrum.vectors / np.linalg.norm(spectrum.vectors, axis=0)
        eigenvalues = spectrum.eigenvalues

        report: Dict[str, Any] = {
            "subcommand": "floquet",
            "parameters": _parameters(p) if p is not None else {"period": path.period, "dim": path.dim},
            "controls": {"samples": path.n_samples, "steps": steps, "integrator": config.integrator},
            "eigenvalues": eigenvalues,
            "moduli": np.abs(eigenvalues),
            "total_phases": [complex(np.angle(lam), -np.log(abs(lam))) for lam in eigenvalues],
            "eigenvectors": [vectors[:, j] for j in range(vectors.shape[1])],
            "max_residual": spectrum.max_residual,
            "integration_error": mono.estimated_error,
        }
        if config.with_adiabatic:
            report["adiabatic"] = self._adiabatic_distances(config, path, p, vectors)
        return report

    async def cmd_floquet(self, config: RunConfig) -> Dict[str, Any]:
        """Exact cyclic states from the eigenvectors of U(T)"""
        return await asyncio.to_thread(self._floquet_report, config)

    @staticmethod
    def _fail(code: int, message: str) -> int:
        logger.debug(f"exit {code}: {message}")
        print(f"nhphase: {message}", file=sys.stderr)
        return code

    async def dispatch(self, options: Dict[str, Any]) -> int:
        """Validate raw options, run the subcommand and write its report"""
        fields = {k: v for k, v in options.items() if v is not None and k not in SWEEP_GRID_KEYS}
        grid = {k: v for k, v in options.items() if v is not None and k in SWEEP_GRID_KEYS}
        try:
            config = RunConfig(**fields)
            spec = None
            if config.subcommand == "sweep":
                if config.theta is not None and not any(k.startswith("theta_") for k in grid):
                    grid.update(theta_min=config.theta, theta_max=config.theta, theta_count=1)
                if "phi_i" in fields and not any(k.startswith("phi_i_") for k in grid):
                    grid.update(phi_i_min=config.phi_i, phi_i_max=config.phi_i, phi_i_count=1)
                spec = SweepSpec(**grid)
        except ValidationError as e:
            return self._fail(EXIT_VALIDATION, f"invalid arguments: {describe_validation_error(e)}")

        try:
            if config.subcommand == "two-level":
                text = format_report(await self.cmd_two_level(config), config.format or "json")
            elif config.subcommand == "sweep":
                rows = await self.cmd_sweep(config, spec)
                if config.format == "json":
                    text = format_json({"rows": rows})
                else:
                    text = format_csv(rows, SWEEP_COLUMNS)
            elif config.subcommand == "verify":
                text = format_report(await self.cmd_verify(config), config.format or "json")
            else:
                text = format_report(await self.cmd_floquet(config), config.format or "json")
            write_output(text, config.output)
        except Resonance as e:
            return self._fail(EXIT_RESONANCE, f"resonance: {e}")
        except ModelParseError as e:
            return self._fail(EXIT_PARSE, f"cannot parse Hamiltonian file: {e}")
        except OSError as e:
            return self._fail(EXIT_IO, f"I/O error: {e}")
        except ValueError as e:
            return self._fail(EXIT_VALIDATION, f"invalid arguments: {e}")
        except NHPhaseError as e:
            logger.error(f"{config.subcommand} failed: {e}")
            return self._fail(EXIT_FAILURE, f"{type(e).__name__}: {e}")

        logger.info(f"{config.subcommand} finished")
        return EXIT_OK
