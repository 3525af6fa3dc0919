"""Run configuration: one TOML or JSON file per experiment."""

import json
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.config import settings
from app.services.itinerary import ItineraryParams, TransferProfile
from app.services.lattice import CouplingParams
from app.utils.exceptions import ConfigError

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    """Every input of a pipeline run; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    p: int = Field(4, ge=4, description="Number of sites")
    eps: float = Field(settings.DEFAULT_EPS, gt=0.0, lt=math.pi)
    r: int = Field(settings.DEFAULT_R, ge=3, description="Smallness exponent")
    profile: Literal["exp", "flat"] = "exp"
    path: list[int] = Field(..., min_length=2, description="Unit-step site path")
    n_per_string: int = Field(5, ge=1)
    l_min: float = Field(50.0, gt=0.0)
    theta_max: float = Field(0.6, gt=0.0, le=2.0)
    transfer_profile: TransferProfile = "turning"
    rho_v: float | None = Field(None, gt=0.0)
    rho_h: float | None = Field(None, gt=0.0)

    integrator: Literal["rk", "symplectic"] = "rk"
    integrator_tol: float = Field(settings.DEFAULT_INTEGRATOR_TOL, gt=0.0)
    drift_budget: float = Field(settings.DEFAULT_DRIFT_BUDGET, gt=0.0)
    segment_tol: float = Field(1e-9, gt=0.0)
    tol_g: float = Field(1e-8, gt=0.0)
    tol_x: float = Field(1e-10, gt=0.0)
    max_sweeps: int = Field(50, ge=1)
    grid_density: int = Field(8, ge=4, description="Boundary samples per circle")
    strict_certification: bool = Field(
        True, description="Halt when certification fails instead of replaying"
    )
    initial_jitter: float = Field(
        0.0, ge=0.0, lt=1.0, description="Seeded start offset, fraction of rho_v"
    )
    off_carrier_multiple: float = Field(
        4.0, gt=0.0, description="Allowed off-carrier energy in units of sqrt(eps)"
    )

    replay_mode: Literal["segments", "continuous"] = "continuous"
    samples_per_segment: int = Field(64, ge=2)
    seed: int = 0
    workers: int = Field(settings.DEFAULT_WORKERS, ge=1)
    output_dir: str = settings.DEFAULT_OUTPUT_DIR

    @field_validator("path")
    @classmethod
    def _unit_steps(cls, path: list[int]) -> list[int]:
        for a, b in zip(path, path[1:], strict=False):
            if abs(b - a) != 1:
                msg = f"path step {a} -> {b} is not a unit step"
                raise ValueError(msg)
        return path

    def coupling(self) -> CouplingParams:
        """Coupling parameters of the run."""
        return CouplingParams(eps=self.eps, r=self.r, profile=self.profile)

    def itinerary_params(self) -> ItineraryParams:
        """Compiler parameters of the run."""
        return ItineraryParams(
            p=self.p,
            eps=self.eps,
            r=self.r,
            n_per_string=self.n_per_string,
            l_min=self.l_min,
            theta_max=self.theta_max,
            transfer_profile=self.transfer_profile,
            rho_v=self.rho_v,
            rho_h=self.rho_h,
        )


def _read(path: Path) -> dict[str, Any]:
    suffix = path.suffix.lower()
    if suffix == ".toml":
        with path.open("rb") as f:
            return tomllib.load(f)
    if suffix == ".json":
        with path.open(encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict):
            msg = f"{path} does not hold a JSON object"
            raise ConfigError(msg, stage="config")
        return data
    msg = f"unsupported config format {suffix!r} (use .toml or .json)"
    raise ConfigError(msg, stage="config")


def load_run_config(
    path: str | Path, overrides: dict[str, Any] | None = None
) -> RunConfig:
    """
    Load and validate a run configuration file.

    Args:
        path: Path to a ``.toml`` or ``.json`` file
        overrides: Values replacing those of the file, e.g. from the command line

    Returns:
        The validated configuration

    Raises:
        ConfigError: If the file cannot be read or does not validate
    """
    path = Path(path)
    try:
        data = _read(path)
    except (OSError, tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        msg = f"cannot read config {path}: {e}"
        raise ConfigError(msg, stage="config") from e
    if overrides:
        data = {**data, **overrides}
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        msg = f"invalid config {path}: {e}"
        raise ConfigError(msg, stage="config") from e
    logger.info(f"Loaded config {path} (p={config.p}, eps={config.eps})")
    return config
