"""
Deterministic pipeline: compile, validate, minimize, certify and replay.

Every stage writes its artifact as soon as it finishes, so a failing run
leaves the artifacts of the stages before it together with ``failure.json``
and a manifest.
"""

import logging
import platform
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from app.config.run_config import RunConfig
from app.services.itinerary import (
    Itinerary,
    ItineraryReport,
    compile_itinerary,
    validate_itinerary,
)
from app.services.lattice.coupling import FloatArray
from app.services.minimizer import (
    BrokenGeodesic,
    CertificationReport,
    MinimizerOptions,
    SectionChart,
    certify_interior,
    minimize,
)
from app.services.pipeline.replay import RunReport, replay_trace
from app.utils.exceptions import CertificationError, DiffusionError, SolverError
from app.utils.io import sha256_file, write_csv, write_json

logger = logging.getLogger(__name__)

PACKAGE = "lattice-diffusion"


@dataclass
class RunOutcome:
    """Artifacts and reports of a pipeline run."""

    out_dir: Path
    files: list[Path] = field(default_factory=list)
    validation: ItineraryReport | None = None
    certification: CertificationReport | None = None
    report: RunReport | None = None

    @property
    def passed(self) -> bool:
        """Whether the last stage that ran succeeded."""
        if self.report is not None:
            return self.report.passed
        return self.validation is not None and self.validation.passed


def _version(name: str) -> str:
    try:
        return metadata.version(name)
    except metadata.PackageNotFoundError:
        return "unknown"


def _versions() -> dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": _version("numpy"),
        "scipy": _version("scipy"),
        "pydantic": _version("pydantic"),
        PACKAGE: _version(PACKAGE),
    }


def _itinerary_doc(itin: Itinerary) -> dict[str, object]:
    return {
        "path": itin.path,
        "string_boundaries": itin.string_boundaries,
        "translations": itin.translations,
        "sections": [
            {
                "center": s.center,
                "donor": s.roles.donor,
                "receiver": s.roles.receiver,
                "facilitator": s.facilitator,
                "sleepers": list(s.sleepers),
                "rho_v": s.rho_v,
                "rho_h": s.rho_h,
            }
            for s in itin.sections
        ],
    }


def _geodesic_doc(bg: BrokenGeodesic) -> dict[str, object]:
    return {
        "points": bg.points,
        "total_length": bg.total_length,
        "grad_norm": bg.grad_norm,
        "interior_margins": bg.interior_margins,
        "converged": bg.converged,
        "sweeps": bg.sweeps,
        "length_history": bg.length_history,
        "segments": [
            {"T": s.T, "length": s.length, "energies": s.energies, "coupled": s.coupled}
            for s in bg.segments
        ],
    }


def _initial_points(itin: Itinerary, config: RunConfig) -> list[FloatArray] | None:
    """Break points offset from the section centres by a seeded jitter."""
    if config.initial_jitter == 0.0:
        return None
    rng = np.random.default_rng(config.seed)
    points = []
    for section in itin.sections[1:-1]:
        chart = SectionChart(section)
        u = np.zeros(chart.dim)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        radius = config.initial_jitter * section.rho_v
        u[:2] = radius * np.cos(angle), radius * np.sin(angle)
        points.append(chart.to_point(u))
    return points


class _Run:
    """Bookkeeping of one pipeline run."""

    def __init__(self, config: RunConfig, out_dir: Path) -> None:
        self.config = config
        self.outcome = RunOutcome(out_dir=out_dir)
        self.stage = "compile"

    def write_json(self, name: str, doc: object) -> None:
        self.outcome.files.append(write_json(self.outcome.out_dir / name, doc))

    def write_manifest(self) -> None:
        files = {
            p.name: sha256_file(p) for p in sorted(self.outcome.files, key=str)
        }
        manifest = {
            "config": self.config.model_dump(mode="json"),
            "versions": _versions(),
            "seed": self.config.seed,
            "files": files,
        }
        write_json(self.outcome.out_dir / "manifest.json", manifest)

    def fail(self, error: DiffusionError) -> None:
        if error.stage is None:
            error.stage = self.stage
        logger.error(f"Run failed at stage {error.stage}: {error.message}")
        self.write_json(
            "failure.json",
            {
                "stage": error.stage,
                "error": type(error).__name__,
                "message": error.message,
                "exit_code": error.exit_code,
            },
        )
        self.write_manifest()


def _pipeline(run: _Run, validate_only: bool) -> RunOutcome:
    config = run.config
    outcome = run.outcome
    params = config.itinerary_params()

    itin = compile_itinerary(config.path, params)
    run.write_json("itinerary.json", _itinerary_doc(itin))

    run.stage = "validate"
    validation = validate_itinerary(itin, config.l_min, config.theta_max)
    outcome.validation = validation
    run.write_json("validation.json", validation)
    if validate_only:
        run.write_manifest()
        return outcome
    if not validation.passed:
        failed = ", ".join(f"{c.rule}[{c.index}]" for c in validation.failures)
        msg = f"itinerary violates its rules: {failed}"
        raise SolverError(msg, stage="validate")

    run.stage = "minimize"
    cp = config.coupling()
    options = MinimizerOptions(
        tol_g=config.tol_g,
        tol_x=config.tol_x,
        max_sweeps=config.max_sweeps,
        segment_tol=config.segment_tol,
        integrator_tol=config.integrator_tol,
        workers=config.workers,
    )
    bg = minimize(itin, cp, initial=_initial_points(itin, config), options=options)
    run.write_json("geodesic.json", _geodesic_doc(bg))

    run.stage = "certify"
    certification = certify_interior(
        bg,
        cp,
        grid_density=config.grid_density,
        segment_tol=config.segment_tol,
        integrator_tol=config.integrator_tol,
        workers=config.workers,
    )
    outcome.certification = certification
    run.write_json("certification.json", certification)
    if not certification.passed:
        failures = "; ".join(certification.failures)
        if config.strict_certification:
            msg = f"certification failed: {failures}"
            raise CertificationError(msg, stage="certify")
        logger.warning(f"Replaying an uncertified geodesic: {failures}")

    run.stage = "replay"
    trace = replay_trace(
        bg,
        itin,
        cp,
        config.integrator_tol,
        mode=config.replay_mode,
        method=config.integrator,
        drift_budget=config.drift_budget,
        off_carrier_multiple=config.off_carrier_multiple,
        samples_per_segment=config.samples_per_segment,
    )
    report = trace.report.model_copy(
        update={
            "certification_passed": certification.passed,
            "certification_failures": certification.failures,
        }
    )
    outcome.report = report
    p = config.p
    run.write_json("report.json", report)
    energy_header = ["t", *(f"E_{i}" for i in range(p)), "H_total"]
    outcome.files.append(
        write_csv(
            outcome.out_dir / "energies.csv",
            energy_header,
            np.column_stack([trace.times, trace.energies, trace.totals]),
        )
    )
    state_header = ["t", *(f"x_{i}" for i in range(p)), *(f"y_{i}" for i in range(p))]
    outcome.files.append(
        write_csv(
            outcome.out_dir / "trajectory.csv",
            state_header,
            np.column_stack([trace.times, trace.states]),
        )
    )
    run.write_manifest()
    return outcome


def run(
    config: RunConfig, out_dir: str | Path | None = None, validate_only: bool = False
) -> RunOutcome:
    """
    Run the pipeline and write its artifacts.

    Args:
        config: Validated run configuration
        out_dir: Output directory, default ``config.output_dir``
        validate_only: Stop after compiling and validating the itinerary

    Returns:
        Reports and written files

    Raises:
        DiffusionError: The failure of the first stage that failed, tagged
            with that stage after its partial artifacts were written
        SolverError: A numerical error outside the toolkit hierarchy, tagged
            with the stage it escaped from
    """
    target = Path(out_dir if out_dir is not None else config.output_dir)
    target.mkdir(parents=True, exist_ok=True)
    current = _Run(config, target)
    logger.info(f"Running path {config.path} into {target}")
    try:
        outcome = _pipeline(current, validate_only)
    except DiffusionError as e:
        current.fail(e)
        raise
    except (ArithmeticError, ValueError, RuntimeError) as e:
        # library errors from numpy or scipy
        error = SolverError(f"{type(e).__name__}: {e}", stage=current.stage)
        current.fail(error)
        raise error from e
    logger.info(f"Run finished: {'passed' if outcome.passed else 'failed'}")
    return outcome
