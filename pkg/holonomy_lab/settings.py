"""
Runtime settings and numerical defaults.

Environment variables are read from the process and from a ``.env`` file in
the working directory.
"""
import os

import numpy as np
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

DEFAULT_SEED = 20080229

# matrixcore
UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-10
SINGULAR_TOL = 1e-12

# eigenframe
DEFAULT_DEG_TOL = 1e-6  # fraction of the quasienergy zone 2*pi/T_p
OVERLAP_MIN = 0.1
AMBIGUITY_MARGIN = 0.1
MIN_GRID = 16

# holonomy
PERM_TOL = 1e-3

# oracles
GAP_TOL = 1e-9
THETA_TOL = 1e-8
THETA_DRAWS = 100

# cli
COMPARE_TOL = 1e-6
PROPAGATE_TOL = 2e-2


def get_seed() -> int:
    """Seed for randomized utilities, from HOLONOMY_LAB_SEED."""
    raw = os.getenv("HOLONOMY_LAB_SEED")
    if raw is None or not raw.strip():
        return DEFAULT_SEED
    return int(raw)


def get_rng(offset: int = 0) -> np.random.Generator:
    """Seeded generator; ``offset`` separates independent streams."""
    return np.random.default_rng(get_seed() + offset)


def get_log_level(default: str = "INFO") -> str:
    return os.getenv("HOLONOMY_LAB_LOG_LEVEL", default).upper()
