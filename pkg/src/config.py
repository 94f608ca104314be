# ABOUTME: Configuration management for the Ramanujan-mask matrix completion toolkit
# ABOUTME: Loads environment variables, defines numerical defaults and installs logging

import logging
import os

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

# Load environment variables from .env file
load_dotenv()

# Diagnostic verbosity only; never affects results or output files
LOG_LEVEL = os.getenv("RAMANUJAN_MC_LOG_LEVEL", "WARNING").upper()

# Dense linear algebra
POWER_TOLERANCE = 1e-10
POWER_MAX_ITERATIONS = 10_000
POWER_SEED = 0  # start vector of the power iteration

# Subspace and coherence
INPUT_ORTHONORMAL_TOLERANCE = 1e-6
RANK_TOLERANCE = 1e-10  # relative to the largest singular value

# Graphs
RAMANUJAN_SLACK = 1e-6
SIGMA1_RELATIVE_TOLERANCE = 1e-8

# Solver defaults
DEFAULT_PENALTY = 1.0
DEFAULT_PRIMAL_TOLERANCE = 1e-9
DEFAULT_DUAL_TOLERANCE = 1e-9
DEFAULT_MAX_ITERATIONS = 5000
MONOTONE_BURN_IN = 10

# Certificates
DEFAULT_CERTIFICATE_SAMPLES = 100
CERTIFICATE_SLACK = 1e-9

# Experiments
DEFAULT_SUCCESS_THRESHOLD = 1e-6
DESK_SCALE_MAX_DEGREE = 30
DESK_SCALE_TRIALS = 20
FULL_SCALE_TRIALS = 100
MAX_REGENERATIONS = 10
LOW_RANK_TOLERANCE = 1e-8  # sigma_r / sigma_1 floor for generated matrices

_stderr_console = Console(stderr=True)
_configured = False


def configure_logging(level: str | None = None) -> None:
    """
    Install a rich log handler on the root logger (idempotent).

    Args:
        level: Logging level name; defaults to RAMANUJAN_MC_LOG_LEVEL
    """
    global _configured
    if _configured:
        return

    logging.basicConfig(
        level=(level or LOG_LEVEL),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=_stderr_console, show_path=False)],
    )
    _configured = True
