"""End-to-end runs: replay under the full dynamics, artifacts and checks."""

from app.services.pipeline.identity_suite import (
    IdentityCheck,
    IdentityReport,
    run_identity_suite,
)
from app.services.pipeline.replay import (
    PathCrossing,
    ReplayMode,
    ReplayTrace,
    RunReport,
    replay,
    replay_trace,
)
from app.services.pipeline.runner import RunOutcome, run

__all__ = [
    "IdentityCheck",
    "IdentityReport",
    "PathCrossing",
    "ReplayMode",
    "ReplayTrace",
    "RunOutcome",
    "RunReport",
    "replay",
    "replay_trace",
    "run",
    "run_identity_suite",
]
