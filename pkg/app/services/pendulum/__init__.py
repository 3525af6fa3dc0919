"""Single-pendulum dynamics, flight integrals and boundary-value solvers."""

from app.services.pendulum.bvp import (
    ArcBranch,
    PendulumArc,
    arc_action,
    arc_trajectory,
    bvp_solve,
    classify_boundary,
    energy_of_time,
    time_of_energy,
)
from app.services.pendulum.dynamics import (
    PendulumState,
    pendulum_flow,
    potential,
    shoot_by_integration,
)
from app.services.pendulum.identities import (
    SensitivityRecord,
    kibound_constant,
    rotation_period,
    rotation_period_bound,
    sensitivity_identities,
    stiffness_K,
)

__all__ = [
    "ArcBranch",
    "PendulumArc",
    "PendulumState",
    "SensitivityRecord",
    "arc_action",
    "arc_trajectory",
    "bvp_solve",
    "classify_boundary",
    "energy_of_time",
    "kibound_constant",
    "pendulum_flow",
    "potential",
    "rotation_period",
    "rotation_period_bound",
    "sensitivity_identities",
    "shoot_by_integration",
    "stiffness_K",
    "time_of_energy",
]
