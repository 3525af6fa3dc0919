"""Pendulum potential, state and numerical flow."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from app.config import settings
from app.utils.exceptions import BracketError, IntegrationError

logger = logging.getLogger(__name__)


def potential(x: float) -> float:
    """
    Pendulum potential ``V(x) = -cos(x) - 1``.

    The maximum 0 is attained at the top ``x = pi`` and the minimum -2 at the
    bottom ``x = 0``. Evaluated as ``-2 cos^2(x/2)``, which keeps full relative
    precision near the top.

    Args:
        x: Angle in radians

    Returns:
        Potential energy in ``[-2, 0]``
    """
    return -2.0 * math.cos(0.5 * x) ** 2


def potential_gap(x: float, energy: float) -> float:
    """
    Return ``2(E - V(x))`` without cancellation near the top.

    Args:
        x: Angle in radians
        energy: Pendulum energy

    Returns:
        Twice the kinetic energy at ``x``
    """
    return 2.0 * energy + 4.0 * math.cos(0.5 * x) ** 2


@dataclass(frozen=True)
class PendulumState:
    """Angle and angular velocity of one pendulum; ``x`` is an unreduced lift."""

    x: float
    y: float

    @property
    def energy(self) -> float:
        """Energy ``y^2/2 + V(x)``."""
        return 0.5 * self.y * self.y + potential(self.x)


def _rhs(_: float, z: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.array([z[1], -math.sin(z[0])])


def _integrate(
    state: PendulumState,
    t: float,
    tol: float,
    t_eval: NDArray[np.float64] | None = None,
) -> NDArray[np.float64]:
    sol = solve_ivp(
        _rhs,
        (0.0, t),
        [state.x, state.y],
        method="DOP853",
        rtol=tol,
        atol=tol,
        t_eval=t_eval,
    )
    if not sol.success:
        msg = f"pendulum flow failed after t={sol.t[-1]:.6g}: {sol.message}"
        raise IntegrationError(msg, stage="pendulum")
    return np.asarray(sol.y, dtype=float)


def pendulum_flow(
    state: PendulumState, t: float, tol: float | None = None
) -> PendulumState:
    """
    Integrate ``x' = y, y' = -sin x`` for a time ``t``.

    Args:
        state: Initial state
        t: Duration, may be negative
        tol: Per-step tolerance of the adaptive Runge-Kutta scheme

    Returns:
        State at time ``t``

    Raises:
        ValueError: If ``tol`` is not positive
        IntegrationError: If the integrator cannot meet ``tol``
    """
    tol = settings.DEFAULT_INTEGRATOR_TOL if tol is None else tol
    if tol <= 0.0:
        msg = f"tol must be positive, got {tol!r}"
        raise ValueError(msg)
    if t == 0.0:
        return state
    z = _integrate(state, t, tol)
    return PendulumState(float(z[0, -1]), float(z[1, -1]))


def sample_flow(
    state: PendulumState, times: NDArray[np.float64], tol: float | None = None
) -> NDArray[np.float64]:
    """
    Sample the pendulum flow at increasing non-negative times.

    Args:
        state: Initial state at time 0
        times: Sample times, sorted, within ``[0, times[-1]]``
        tol: Integrator tolerance

    Returns:
        Array of shape ``(2, len(times))`` with angles and velocities
    """
    tol = settings.DEFAULT_INTEGRATOR_TOL if tol is None else tol
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[-1] == 0.0:
        return np.tile(np.array([[state.x], [state.y]]), (1, times.size))
    return _integrate(state, float(times[-1]), tol, t_eval=times)


def shoot_by_integration(
    alpha: float,
    beta_end: float,
    T: float,
    v_lo: float,
    v_hi: float,
    tol: float = 1e-12,
) -> float:
    """
    Reference shooting: find ``v0`` with ``x(T; alpha, v0) = beta_end``.

    Brent's method on the initial velocity over ``[v_lo, v_hi]``, each
    evaluation integrating the pendulum with the adaptive scheme. Slow but
    independent of the quadrature-based solver, so it serves as an oracle.

    Args:
        alpha: Start angle
        beta_end: Target end angle
        T: Flight time
        v_lo: Lower initial-velocity bracket
        v_hi: Upper initial-velocity bracket
        tol: Integrator tolerance

    Returns:
        Initial velocity of the connecting solution

    Raises:
        BracketError: If the bracket does not change sign
    """

    def miss(v0: float) -> float:
        return pendulum_flow(PendulumState(alpha, v0), T, tol).x - beta_end

    lo, hi = miss(v_lo), miss(v_hi)
    if lo * hi > 0.0:
        msg = f"shooting miss has one sign ({lo:.3g}, {hi:.3g})"
        raise BracketError(msg, (v_lo, v_hi), stage="pendulum")
    v0 = brentq(miss, v_lo, v_hi, xtol=1e-13, rtol=1e-13, maxiter=200)
    logger.debug(f"shooting oracle: alpha={alpha}, beta={beta_end}, T={T}, v0={v0}")
    return float(v0)
