#!/usr/bin/env python3
"""
Developer commands for lattice-diffusion, exposed as poetry scripts.

``poetry run test``, ``format``, ``lint``, ``typecheck``, ``checks``,
``pipeline`` and ``clean`` map to the functions below.
"""

import shutil
import subprocess
import sys
from collections.abc import Callable
from pathlib import Path

ROOT_DIR = Path(__file__).parent.parent.resolve()

CACHE_PATTERNS = (
    "**/__pycache__",
    "**/.pytest_cache",
    "**/.ruff_cache",
    "**/.mypy_cache",
    "**/*.pyc",
    ".coverage",
    "htmlcov",
)


def run_command(cmd: list[str]) -> int:
    """
    Run a tool from the project root and return its exit code.

    Args:
        cmd: Command and arguments

    Returns:
        int: Exit code of the tool
    """
    code = subprocess.run(cmd, cwd=ROOT_DIR, check=False).returncode
    if code:
        print(f"{' '.join(cmd)} exited with {code}")
    return code


def _cli_args(args: list[str] | None) -> list[str]:
    return sys.argv[1:] if args is None else args


def run_tests(args: list[str] | None = None) -> int:
    """Run pytest, passing extra arguments such as ``-m "not slow"``."""
    return run_command(["pytest", *_cli_args(args)])


def format_code() -> int:
    """Format the tree with ruff."""
    return run_command(["ruff", "format", str(ROOT_DIR)])


def lint(fix: bool = True) -> int:
    """Lint the tree with ruff, fixing what it can unless ``fix`` is off."""
    flags = ["--fix"] if fix else []
    return run_command(["ruff", "check", *flags, str(ROOT_DIR)])


def typecheck() -> int:
    """Type-check the package with mypy."""
    return run_command(["mypy", "app"])


def all_checks() -> int:
    """
    Lint, type-check and run the fast tests, stopping at the first failure.

    Returns:
        int: Exit code of the first failing step, else 0
    """
    for step in (lambda: lint(fix=False), typecheck):
        if code := step():
            return code
    return run_tests(["-m", "not slow"])


def pipeline(args: list[str] | None = None) -> int:
    """
    Run ``lattice-diffusion run`` with the given arguments.

    Accepts ``--config PATH`` like the command line, and a bare config path as
    the first argument for short use.

    Args:
        args: Arguments of ``run``, default the command-line arguments

    Returns:
        int: Exit code of the run
    """
    args = _cli_args(args)
    if not args:
        print("Usage: pipeline --config PATH [--out DIR] [--validate-only]")
        return 2
    if not args[0].startswith("-"):
        args = ["--config", *args]
    return run_command([sys.executable, "-m", "app.main", "run", *args])


def clean() -> int:
    """Remove caches and coverage output."""
    for pattern in CACHE_PATTERNS:
        for path in ROOT_DIR.glob(pattern):
            if path.is_dir():
                shutil.rmtree(path)
            else:
                path.unlink()
    return 0


COMMANDS: dict[str, Callable[..., int]] = {
    "test": run_tests,
    "format": format_code,
    "lint": lint,
    "typecheck": typecheck,
    "checks": all_checks,
    "pipeline": pipeline,
    "clean": clean,
}


def main() -> int:
    """Dispatch ``python scripts/run.py COMMAND [ARGS]``."""
    if len(sys.argv) < 2 or sys.argv[1] not in COMMANDS:
        print(f"Commands: {', '.join(COMMANDS)}")
        return 0 if len(sys.argv) < 2 else 1
    name, rest = sys.argv[1], sys.argv[2:]
    if name in ("test", "pipeline"):
        return COMMANDS[name](rest)
    return COMMANDS[name]()


if __name__ == "__main__":
    sys.exit(main())
