"""Stiffness, revolution period and the closed-form sensitivity identities."""

import math
from dataclasses import dataclass

from app.config import settings
from app.services.pendulum.bvp import PendulumArc
from app.services.pendulum.dynamics import potential
from app.services.pendulum.quadrature import (
    TWO_PI,
    FlightKind,
    flight_integral,
    period_integral,
)
from app.utils.exceptions import InadmissibleBoundaryError


@dataclass(frozen=True)
class SensitivityRecord:
    """Derivatives of an arc with respect to its duration and start point."""

    dE_dT: float  # noqa: N815
    dXdot_dT: float  # noqa: N815
    dT_dx: float  # noqa: N815


def kibound_constant() -> float:
    """Return ``c = 2 pi / sqrt(1 + pi^2 / 2)`` of the bound ``K <= c E / n``."""
    return 2.0 * math.pi / math.sqrt(1.0 + 0.5 * math.pi**2)


def stiffness_K(alpha: float, beta_end: float, E: float) -> float:
    """
    Stiffness ``K = (int dx / (2(E - V))^{3/2})^{-1}`` of a monotone arc.

    Args:
        alpha: Start angle
        beta_end: End angle
        E: Arc energy

    Returns:
        Positive stiffness

    Raises:
        InadmissibleBoundaryError: If ``E`` does not exceed ``V`` on the stretch
    """
    lo, hi = min(alpha, beta_end), max(alpha, beta_end)
    if lo == hi:
        msg = "stiffness of a zero-length stretch is undefined"
        raise InadmissibleBoundaryError(msg, stage="pendulum")
    first_top = math.pi + TWO_PI * math.ceil((lo - math.pi) / TWO_PI)
    ceiling = 0.0 if first_top <= hi else max(potential(lo), potential(hi))
    if E <= ceiling:
        msg = f"E={E!r} reaches the potential on [{lo!r}, {hi!r}]: singular integrand"
        raise InadmissibleBoundaryError(msg, stage="pendulum")
    return 1.0 / flight_integral(lo, hi, E, FlightKind.STIFFNESS)


def rotation_period(E: float) -> float:
    """
    Time of one full revolution at energy ``E``.

    Args:
        E: Pendulum energy

    Returns:
        Revolution period

    Raises:
        InadmissibleBoundaryError: If ``E <= 0``
    """
    if E <= 0.0:
        msg = f"no rotation at or below the separatrix, got E={E!r}"
        raise InadmissibleBoundaryError(msg, stage="pendulum")
    return period_integral(E, FlightKind.TIME, settings.DEFAULT_QUAD_TOL)


def rotation_period_bound(E: float) -> float:
    """Upper bound ``sqrt(2) pi (ln(1 + sqrt(1 + E)) - ln E)`` on the period."""
    return math.sqrt(2.0) * math.pi * (math.log1p(math.sqrt(1.0 + E)) - math.log(E))


def sensitivity_identities(
    arc: PendulumArc, total_stiffness: float | None = None
) -> SensitivityRecord:
    """
    Closed-form derivatives of a monotone arc.

    With ``K_i`` the stiffness of the arc,

    * ``dE/dT = -K_i``,
    * ``d(v0)/dT = -K_i / v0``, i.e. ``-K_i / sqrt(2(E - V(alpha)))`` when
      ``v0 > 0``,
    * ``dT/dx = K^{-1} d(v0)/dT`` with ``K`` the summed stiffness of all sites
      sharing the duration (``K_i`` alone for a single pendulum).

    Args:
        arc: Monotone arc
        total_stiffness: Summed stiffness of the multi-pendulum context

    Returns:
        The three derivatives

    Raises:
        InadmissibleBoundaryError: If the arc turns or arrives at rest
    """
    if arc.turning or arc.v0 == 0.0 or arc.v1 == 0.0:
        msg = "sensitivity identities need an arc with one-signed velocity"
        raise InadmissibleBoundaryError(msg, stage="pendulum")
    k_i = stiffness_K(arc.alpha, arc.beta_end, arc.E)
    k_total = k_i if total_stiffness is None else total_stiffness
    dxdot = -k_i / arc.v0
    return SensitivityRecord(dE_dT=-k_i, dXdot_dT=dxdot, dT_dx=dxdot / k_total)
