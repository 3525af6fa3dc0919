"""Command-line entry point of the lattice diffusion toolkit."""

import argparse
import dataclasses
import logging
import sys
from collections.abc import Sequence

from app.config import settings
from app.config.run_config import load_run_config
from app.services.pendulum import ArcBranch, bvp_solve
from app.services.pipeline import run, run_identity_suite
from app.utils.exceptions import DiffusionError, ReplayDeviationError
from app.utils.io import canonical_json_bytes

logger = logging.getLogger(__name__)

FULL_REVOLUTIONS = tuple(range(1, 11))
FULL_SEGMENTS = 30


def configure_logging(quiet: bool = False) -> None:
    """
    Set up root logging.

    Args:
        quiet: Only report warnings and errors
    """
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stdout)]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    level = logging.WARNING if quiet else getattr(logging, settings.LOG_LEVEL)
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of the command line."""
    parser = argparse.ArgumentParser(
        prog="lattice-diffusion",
        description="Construct and replay diffusing orbits of a pendulum lattice.",
    )
    parser.add_argument("--quiet", action="store_true", help="log warnings only")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="run the full pipeline")
    run_cmd.add_argument("--config", required=True, help="TOML or JSON run config")
    run_cmd.add_argument("--out", help="output directory")
    run_cmd.add_argument(
        "--validate-only",
        action="store_true",
        help="stop after compiling and validating the itinerary",
    )

    validate_cmd = commands.add_parser("validate", help="compile and validate only")
    validate_cmd.add_argument("--config", required=True, help="TOML or JSON run config")
    validate_cmd.add_argument("--out", help="output directory")

    identities = commands.add_parser("identities", help="run the identity suite")
    identities.add_argument("--full", action="store_true", help="use the full grid")
    identities.add_argument("--seed", type=int, default=0)
    identities.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS)

    bvp = commands.add_parser("bvp", help="solve one pendulum boundary-value problem")
    bvp.add_argument("--alpha", type=float, required=True, help="start angle")
    bvp.add_argument("--beta", type=float, required=True, help="end angle")
    bvp.add_argument("--T", type=float, required=True, help="flight time")
    bvp.add_argument("--branch", choices=[b.value for b in ArcBranch])
    return parser


def _run_command(args: argparse.Namespace, validate_only: bool) -> int:
    overrides = {"output_dir": args.out} if args.out else None
    config = load_run_config(args.config, overrides)
    outcome = run(config, validate_only=validate_only)
    if validate_only:
        failures = outcome.validation.failures if outcome.validation else []
        for check in failures:
            logger.warning(
                f"Rule {check.rule} fails at {check.index}: "
                f"{check.value:.6g} against {check.limit:.6g}"
            )
        return 0 if outcome.passed else 1
    report = outcome.report
    if report is not None and not report.passed:
        logger.error(
            f"Replay deviates from its path: carriers follow path "
            f"{report.carriers_follow_path}, off-carrier energy "
            f"{report.off_carrier_max:.3g} against {report.off_carrier_limit:.3g}"
        )
        return ReplayDeviationError.exit_code
    return 0


def _identities_command(args: argparse.Namespace) -> int:
    if args.full:
        report = run_identity_suite(
            revolutions=FULL_REVOLUTIONS,
            segments=FULL_SEGMENTS,
            seed=args.seed,
            workers=args.workers,
        )
    else:
        report = run_identity_suite(seed=args.seed, workers=args.workers)
    print(report.table())
    return 0 if report.passed else 1


def _bvp_command(args: argparse.Namespace) -> int:
    branch = ArcBranch(args.branch) if args.branch else None
    arc = bvp_solve(args.alpha, args.beta, branch, args.T)
    print(canonical_json_bytes(dataclasses.asdict(arc)).decode("utf-8"), end="")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    """
    Parse arguments and dispatch to a command.

    Args:
        argv: Arguments without the program name, default ``sys.argv[1:]``

    Returns:
        Exit code: 0 on success, 1 for a failed check, 5 for a replay that
        leaves its path and the error's own code for a toolkit error
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.quiet)
    try:
        if args.command == "run":
            return _run_command(args, args.validate_only)
        if args.command == "validate":
            return _run_command(args, validate_only=True)
        if args.command == "identities":
            return _identities_command(args)
        return _bvp_command(args)
    except DiffusionError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
