"""Application settings and configuration."""

import os

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Logging
LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE: str = os.getenv("LOG_FILE", "")

# Physical defaults
DEFAULT_EPS: float = float(os.getenv("DEFAULT_EPS", "0.05"))
DEFAULT_R: int = int(os.getenv("DEFAULT_R", "3"))

# Numerical tolerances
DEFAULT_INTEGRATOR_TOL: float = float(os.getenv("DEFAULT_INTEGRATOR_TOL", "1e-10"))
DEFAULT_QUAD_TOL: float = float(os.getenv("DEFAULT_QUAD_TOL", "1e-12"))
# Allowed Hamiltonian drift per unit time
DEFAULT_DRIFT_BUDGET: float = float(os.getenv("DEFAULT_DRIFT_BUDGET", "1e-8"))
DEFAULT_MAX_SHOOTING_ITER: int = int(os.getenv("DEFAULT_MAX_SHOOTING_ITER", "200"))

# Execution
DEFAULT_WORKERS: int = int(os.getenv("DEFAULT_WORKERS", "1"))
DEFAULT_OUTPUT_DIR: str = os.getenv("DEFAULT_OUTPUT_DIR", "runs")
