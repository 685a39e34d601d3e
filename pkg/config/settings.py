"""
Configuration settings for the nhphase toolkit
"""

import os
from dotenv import load_dotenv

load_dotenv()

# Logging Configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "nhphase.log")

# Reproducibility
NHPHASE_SEED = int(os.getenv("NHPHASE_SEED", "0"))  # inverse iteration retry seed

# Eigensolver Configuration
EIG_TOL = float(os.getenv("EIG_TOL", "1e-10"))  # relative to ||A||
EIG_SWEEPS_PER_DIM = int(os.getenv("EIG_SWEEPS_PER_DIM", "100"))
PIVOT_TOL = float(os.getenv("PIVOT_TOL", "1e-14"))  # relative to max |U_kk|

# Spectrum / Frame Configuration
DEGENERACY_TOL = float(os.getenv("DEGENERACY_TOL", "1e-8"))  # relative to max(1, ||H||)
PAIRING_TOL = float(os.getenv("PAIRING_TOL", "1e-8"))
FD_ORDER = int(os.getenv("FD_ORDER", "4"))  # central difference order, 2 or 4

# Phase Configuration
REALNESS_TOL = float(os.getenv("REALNESS_TOL", "1e-7"))  # relative to max(1, |gamma_tilde|)

# Evolution Configuration
RESONANCE_TOL = float(os.getenv("RESONANCE_TOL", "1e-8"))  # relative to 1 + ||M||
OVERLAP_TOL = float(os.getenv("OVERLAP_TOL", "1e-10"))  # smallest singular value of the psi Gram matrix
UNSTABLE_NORM = float(os.getenv("UNSTABLE_NORM", "1e12"))
MAX_PHASE_STEP = float(os.getenv("MAX_PHASE_STEP", "0.05"))  # rad per integrator step

# CLI Defaults
DEFAULT_SAMPLES = int(os.getenv("DEFAULT_SAMPLES", "2048"))
DEFAULT_STEPS = int(os.getenv("DEFAULT_STEPS", "16384"))
ADIABATIC_ETA_LIMIT = float(os.getenv("ADIABATIC_ETA_LIMIT", "0.1"))
VERIFY_DEFECT_FACTOR = float(os.getenv("VERIFY_DEFECT_FACTOR", "10.0"))  # PASS if defect <= factor * eta
ASYNC_WORKERS = int(os.getenv("ASYNC_WORKERS", "8"))  # sweep rows per batch
