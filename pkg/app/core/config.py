"""
Application Configuration
Numerical tolerances, physical constants and regime thresholds.
Only the sweep worker count is read from the environment.
"""

import os

from dotenv import load_dotenv

load_dotenv()


# ============================================================================
# NUMERICAL TOLERANCES
# ============================================================================

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
TOL_PROB = 1e-12
TOL_ORTHONORMAL = 1e-12
ORACLE_TOL = 1e-9

# log-space floor; anything below is reported as an exact zero
UNDERFLOW_LOG = -700.0

MAX_DENSE_DIM = 2 ** 14


# ============================================================================
# PHYSICAL CONSTANTS & REGIME THRESHOLDS
# ============================================================================

SPEED_OF_LIGHT = 299_792_458.0

SOFT_SECTOR_THRESHOLD = 0.1
DIPOLE_THRESHOLD = 0.1

# directional cells per energy shell for inline measures
DEFAULT_SHELL_RESOLUTION = 64

# relative spread applied to isotropic grids so the measure stays injective
ISOTROPIC_JITTER = 1e-6


# ============================================================================
# BROADCAST DEFAULTS
# ============================================================================

BROADCAST_TOL = 1e-4
REDUNDANCY_DELTA = 0.1


# ============================================================================
# WORKER POOL
# ============================================================================

WORKERS = max(1, int(os.getenv("SBSIM_WORKERS", "1")))
