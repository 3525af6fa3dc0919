"""
Two-point boundary-value problems for a single pendulum.

Every admissible boundary pair ``(alpha, beta_end)`` is mapped to a canonical
frame by the reflection ``x -> -x`` and, when the end nearer to a top is the
start, by time reversal. In that frame the motion starts moving right from
``a`` and either

* crosses a top (``crossing``): the energy is positive and the flight time is
  a decreasing function of it,
* stays below the next top and arrives moving (``monotone``), or
* climbs towards the next top, turns and falls back to ``b`` (``turning``).

The flight time is monotone in a logarithmic energy coordinate on each family,
so Brent's method on that coordinate finds the unique solution. This is the
shooting on the initial velocity carried out through the quadrature form of
the flight time rather than through integration.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of :class:`enum.StrEnum` (``str()`` yields the value)."""

        def __str__(self) -> str:
            return str.__str__(self)

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from app.config import settings
from app.services.pendulum.dynamics import (
    PendulumState,
    potential,
    potential_gap,
    sample_flow,
)
from app.services.pendulum.quadrature import (
    MIN_ABS_ENERGY,
    TWO_PI,
    FlightKind,
    flight_integral,
    turning_integral,
)
from app.utils.exceptions import BracketError, InadmissibleBoundaryError

logger = logging.getLogger(__name__)

# Radius of the bottom/top windows of each boundary class
WINDOW = 1.0

_LOG_E_MIN = math.log(MIN_ABS_ENERGY) + 1e-9
_HINT_HALF_WIDTH = 0.5


class ArcBranch(StrEnum):
    """Admissible boundary classes of a single-pendulum arc."""

    BOTTOM_TO_TOP = "bottom_to_top"
    TOP_TO_BOTTOM = "top_to_bottom"
    BOTTOM_TO_NEXT_BOTTOM = "bottom_to_next_bottom"
    ROTATION = "rotation"
    SADDLE_DWELL = "saddle_dwell"


@dataclass(frozen=True)
class PendulumArc:
    """
    Solution of a pendulum boundary-value problem.

    ``turning`` marks arcs whose velocity changes sign once before the end.
    """

    alpha: float
    beta_end: float
    T: float
    E: float
    v0: float
    v1: float
    branch: ArcBranch
    turning: bool = False


@dataclass(frozen=True)
class CanonicalFrame:
    """Boundary pair mapped to a left-to-right motion."""

    sign: float
    reversed: bool
    a: float
    b: float
    crossing: bool
    top: float
    equilibrium: bool = False


def _next_top(x: float) -> float:
    return math.pi + TWO_PI * (math.floor((x - math.pi) / TWO_PI) + 1)


def _at_top(x: float) -> bool:
    return math.cos(0.5 * x) ** 2 < 1e-30


def classify_boundary(alpha: float, beta_end: float) -> ArcBranch:
    """
    Return the boundary class of ``(alpha, beta_end)``.

    Lifts by ``2 pi`` and the reflection ``x -> -x`` are allowed.

    Args:
        alpha: Start angle
        beta_end: End angle

    Returns:
        The branch the pair belongs to

    Raises:
        InadmissibleBoundaryError: If the pair is in no admissible class
    """
    for sign in (1.0, -1.0):
        a, b = sign * alpha, sign * beta_end
        if b - a >= TWO_PI:
            return ArcBranch.ROTATION
        k0 = round(a / TWO_PI)
        for k in (k0 - 1, k0, k0 + 1):
            a_s, b_s = a - TWO_PI * k, b - TWO_PI * k
            if abs(a_s) <= WINDOW and abs(b_s - math.pi) <= WINDOW:
                return ArcBranch.BOTTOM_TO_TOP
            if abs(a_s + math.pi) <= WINDOW and abs(b_s) <= WINDOW:
                return ArcBranch.TOP_TO_BOTTOM
            if abs(a_s) <= WINDOW and abs(b_s - TWO_PI) <= WINDOW:
                return ArcBranch.BOTTOM_TO_NEXT_BOTTOM
            if abs(a_s - math.pi) < WINDOW and abs(b_s - math.pi) < WINDOW:
                return ArcBranch.SADDLE_DWELL
    msg = f"boundary pair ({alpha!r}, {beta_end!r}) is not in an admissible class"
    raise InadmissibleBoundaryError(msg, stage="pendulum")


def canonical_frame(alpha: float, beta_end: float) -> CanonicalFrame:
    """
    Map a boundary pair to its canonical left-to-right frame.

    Args:
        alpha: Start angle
        beta_end: End angle

    Returns:
        The canonical frame
    """
    sign = 1.0 if alpha <= beta_end else -1.0
    a, b = sign * alpha, sign * beta_end
    if a == b and _at_top(a):
        return CanonicalFrame(sign, False, a, b, False, _next_top(a), equilibrium=True)
    top = _next_top(a)
    crossing = top <= b
    rev = False
    if not crossing and (a - (top - TWO_PI)) < (top - b):
        a, b = -b, -a
        rev = True
        top = _next_top(a)
        crossing = top <= b
    return CanonicalFrame(sign, rev, a, b, crossing, top)


def _resolve_branch(
    alpha: float, beta_end: float, branch: ArcBranch | None
) -> ArcBranch:
    actual = classify_boundary(alpha, beta_end)
    if branch is not None and ArcBranch(branch) is not actual:
        msg = f"boundary pair ({alpha!r}, {beta_end!r}) is {actual}, not {branch}"
        raise InadmissibleBoundaryError(msg, stage="pendulum")
    return actual


def _turning_integral(frame: CanonicalFrame, energy: float, kind: FlightKind) -> float:
    return turning_integral(frame.a, frame.top, energy, kind) + turning_integral(
        frame.b, frame.top, energy, kind
    )


def _root_decreasing(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    hint: float | None,
    what: str,
) -> float:
    """Root of a decreasing function of a log-energy coordinate."""
    maxiter = settings.DEFAULT_MAX_SHOOTING_ITER
    if hint is not None and lo < hint < hi:
        a, b = max(lo, hint - _HINT_HALF_WIDTH), min(hi, hint + _HINT_HALF_WIDTH)
        if func(a) > 0.0 > func(b):
            return float(brentq(func, a, b, xtol=1e-13, maxiter=maxiter))
    f_lo, f_hi = func(lo), func(hi)
    if f_lo < 0.0 or f_hi > 0.0:
        msg = f"{what}: flight time not bracketed ({f_lo:.3g}, {f_hi:.3g})"
        raise BracketError(msg, (lo, hi), stage="pendulum")
    try:
        return float(brentq(func, lo, hi, xtol=1e-13, maxiter=maxiter))
    except (ValueError, RuntimeError) as e:
        raise BracketError(f"{what}: {e}", (lo, hi), stage="pendulum") from e


def _solve_energy(
    frame: CanonicalFrame, T: float, hint: float | None
) -> tuple[float, bool]:
    """Energy and turning flag of the arc of duration ``T`` in a frame."""
    a, b = frame.a, frame.b
    if frame.equilibrium:
        return 0.0, False

    if frame.crossing:
        z_hi = max(math.log(2.0 * ((b - a) / T) ** 2), _LOG_E_MIN + 1.0)
        z_hint = math.log(hint) if hint is not None and hint > MIN_ABS_ENERGY else None

        def crossing_miss(z: float) -> float:
            return flight_integral(a, b, math.exp(z)) - T

        z = _root_decreasing(crossing_miss, _LOG_E_MIN, z_hi, z_hint, "crossing arc")
        return math.exp(z), False

    vb = potential(b)
    t_critical = flight_integral(a, b, vb)
    if T <= t_critical:
        z_lo = math.log(-vb) - 35.0
        z_hi = max(math.log(2.0 * ((b - a) / T) ** 2), z_lo + 1.0)

        def monotone_miss(z: float) -> float:
            return flight_integral(a, b, vb + math.exp(z)) - T

        if monotone_miss(z_lo) <= 0.0:
            return vb, False
        z_hint = math.log(hint - vb) if hint is not None and hint > vb else None
        z = _root_decreasing(monotone_miss, z_lo, z_hi, z_hint, "monotone arc")
        return vb + math.exp(z), False

    def turning_miss(z: float) -> float:
        return _turning_integral(frame, -math.exp(z), FlightKind.TIME) - T

    z_hi = math.log(-vb)
    z_hint = math.log(-hint) if hint is not None and vb < hint < 0.0 else None
    z_lo = _LOG_E_MIN + 1.0
    z = _root_decreasing(turning_miss, z_lo, z_hi, z_hint, "turning arc")
    return -math.exp(z), True


def _assemble(
    alpha: float,
    beta_end: float,
    T: float,
    energy: float,
    turning: bool,
    branch: ArcBranch,
    frame: CanonicalFrame,
) -> PendulumArc:
    if frame.equilibrium:
        return PendulumArc(alpha, beta_end, T, 0.0, 0.0, 0.0, branch)
    v0_c = math.sqrt(max(potential_gap(frame.a, energy), 0.0))
    v1_c = math.sqrt(max(potential_gap(frame.b, energy), 0.0))
    if turning:
        v1_c = -v1_c
    if frame.reversed:
        v0, v1 = frame.sign * v1_c, frame.sign * v0_c
    else:
        v0, v1 = frame.sign * v0_c, frame.sign * v1_c
    return PendulumArc(alpha, beta_end, T, energy, v0, v1, branch, turning)


def bvp_solve(
    alpha: float,
    beta_end: float,
    branch: ArcBranch | None,
    T: float,
    energy_hint: float | None = None,
) -> PendulumArc:
    """
    Solve the pendulum boundary-value problem ``x(0) = alpha, x(T) = beta_end``.

    Args:
        alpha: Start angle
        beta_end: End angle
        branch: Expected boundary class, or ``None`` to classify
        T: Flight time
        energy_hint: Energy of a nearby solution, narrows the bracket

    Returns:
        The unique confined arc

    Raises:
        InadmissibleBoundaryError: If the data is outside the admissible classes
        BracketError: If the energy root cannot be bracketed or refined
    """
    if not T > 0.0:
        msg = f"flight time must be positive, got {T!r}"
        raise InadmissibleBoundaryError(msg, stage="pendulum")
    resolved = _resolve_branch(alpha, beta_end, branch)
    frame = canonical_frame(alpha, beta_end)
    energy, turning = _solve_energy(frame, T, energy_hint)
    return _assemble(alpha, beta_end, T, energy, turning, resolved, frame)


def energy_of_time(
    alpha: float, beta_end: float, branch: ArcBranch | None, T: float
) -> float:
    """
    Energy of the arc from ``alpha`` to ``beta_end`` of duration ``T``.

    Args:
        alpha: Start angle
        beta_end: End angle
        branch: Expected boundary class, or ``None`` to classify
        T: Flight time

    Returns:
        Arc energy
    """
    return bvp_solve(alpha, beta_end, branch, T).E


def time_of_energy(
    alpha: float,
    beta_end: float,
    branch: ArcBranch | None,
    E: float,
    turning: bool = False,
) -> float:
    """
    Flight time of the arc with energy ``E``.

    Below the top, two arcs can share an energy: the one arriving with the
    velocity of the start direction and the one that turns first. ``turning``
    selects the latter.

    Args:
        alpha: Start angle
        beta_end: End angle
        branch: Expected boundary class, or ``None`` to classify
        E: Arc energy
        turning: Whether the arc turns before arriving

    Returns:
        Flight time

    Raises:
        InadmissibleBoundaryError: If no arc of that kind has energy ``E``
    """
    _resolve_branch(alpha, beta_end, branch)
    frame = canonical_frame(alpha, beta_end)
    if frame.equilibrium:
        msg = "both ends at the same top: every duration has energy 0"
        raise InadmissibleBoundaryError(msg, stage="pendulum")
    if frame.crossing:
        if E <= 0.0 or turning:
            msg = f"an arc over the top needs a monotone motion with E > 0, got {E!r}"
            raise InadmissibleBoundaryError(msg, stage="pendulum")
        return flight_integral(frame.a, frame.b, E)
    vb = potential(frame.b)
    if turning:
        if not vb <= E < 0.0:
            msg = f"a turning arc needs V(end) <= E < 0, got {E!r}"
            raise InadmissibleBoundaryError(msg, stage="pendulum")
        return _turning_integral(frame, E, FlightKind.TIME)
    if E < vb:
        msg = f"energy {E!r} is below the end potential {vb!r}"
        raise InadmissibleBoundaryError(msg, stage="pendulum")
    return flight_integral(frame.a, frame.b, E)


def arc_action(arc: PendulumArc) -> float:
    """
    Abbreviated action ``int v^2 dt = int |v| dx`` of an arc.

    Args:
        arc: Solved arc

    Returns:
        Non-negative action
    """
    frame = canonical_frame(arc.alpha, arc.beta_end)
    if frame.equilibrium:
        return 0.0
    if arc.turning:
        return _turning_integral(frame, arc.E, FlightKind.ACTION)
    return flight_integral(frame.a, frame.b, arc.E, FlightKind.ACTION)


def arc_trajectory(arc: PendulumArc, times: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Sample an arc by integrating from its start state.

    Near-separatrix arcs amplify errors like ``exp(t)``, so long samples drift
    away from the exact arc; use for confinement checks over moderate ``T``.

    Args:
        arc: Solved arc
        times: Sorted times in ``[0, arc.T]``

    Returns:
        Angles at the requested times
    """
    states = sample_flow(PendulumState(arc.alpha, arc.v0), times)
    return states[0]
