"""
Flight integrals of the pendulum at fixed energy.

All integrals have the form ``int (2(E - V(x)))**s dx`` with ``s = -1/2``
(time of flight), ``s = -3/2`` (stiffness) or ``s = 1/2`` (abbreviated
action), where ``2(E - V(x)) = 2E + 4 cos^2(x/2)``.

The x axis is cut into "top zones" ``|x - (pi + 2 pi k)| <= pi/2`` and "bottom
zones". In a top zone, with ``u = x - top``, the substitution

* ``sin(u/2) = sqrt(E/2) sinh(w)`` for ``E > 0`` and
* ``sin(u/2) = sqrt(-E/2) cosh(w)`` for ``E < 0``

turns ``dx / sqrt(2(E - V))`` into ``dw / cos(u/2)``, which is smooth and
bounded by ``sqrt(2)``. This resolves both the logarithmic peak near the
separatrix and the square-root singularity at a turning point, so energies as
small as ``1e-300`` are handled. Bottom zones are integrated directly.
"""

import math
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of :class:`enum.StrEnum` (``str()`` yields the value)."""

        def __str__(self) -> str:
            return str.__str__(self)
from functools import lru_cache

from scipy.integrate import quad

from app.config import settings
from app.utils.exceptions import QuadratureError

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi
LN2 = math.log(2.0)

# Energies closer to zero than this are not representable in the w variable
MIN_ABS_ENERGY = 1e-300

_SIN_QUARTER = math.sin(0.25 * math.pi)


class FlightKind(StrEnum):
    """Integrand selector for flight integrals."""

    TIME = "time"
    STIFFNESS = "stiffness"
    ACTION = "action"


_EXPONENTS = {FlightKind.TIME: -0.5, FlightKind.STIFFNESS: -1.5, FlightKind.ACTION: 0.5}


def _log_cosh(w: float) -> float:
    w = abs(w)
    return w + math.log1p(math.exp(-2.0 * w)) - LN2


def _log_sinh(w: float) -> float:
    if w <= 0.0:
        return -math.inf
    return w + math.log1p(-math.exp(-2.0 * w)) - LN2


def _quad(func, lo: float, hi: float, tol: float) -> float:  # noqa: ANN001
    if hi <= lo:
        return 0.0
    value, _ = quad(func, lo, hi, epsabs=tol * 1e-2, epsrel=tol, limit=200)
    return float(value)


def top_of(x: float) -> float:
    """
    Return the top (``pi + 2 pi k``) nearest to ``x``.

    Args:
        x: Angle

    Returns:
        The nearest point of ``pi + 2 pi Z``
    """
    return math.pi + TWO_PI * round((x - math.pi) / TWO_PI)


def _top_w_integral(
    w0: float, w1: float, energy: float, kind: FlightKind, tol: float
) -> float:
    """Integral over ``w`` in ``[w0, w1]`` of the top-zone integrand at ``energy``."""
    if energy > 0.0:
        c = math.sqrt(0.5 * energy)
        log_two_e = math.log(2.0 * energy)

        def sin_half(w: float) -> float:
            return c * math.sinh(w)

        def log_delta(w: float) -> float:
            return log_two_e + 2.0 * _log_cosh(w)

    else:
        c = math.sqrt(-0.5 * energy)
        log_two_e = math.log(-2.0 * energy)

        def sin_half(w: float) -> float:
            return c * math.cosh(w)

        def log_delta(w: float) -> float:
            return log_two_e + 2.0 * _log_sinh(w)

    def cos_half(w: float) -> float:
        s = sin_half(w)
        return math.sqrt(max(1.0 - s * s, 0.0))

    if kind is FlightKind.TIME:

        def integrand(w: float) -> float:
            return 1.0 / cos_half(w)

    elif kind is FlightKind.STIFFNESS:

        def integrand(w: float) -> float:
            return math.exp(-log_delta(w)) / cos_half(w)

    else:

        def integrand(w: float) -> float:
            return math.exp(log_delta(w)) / cos_half(w)

    return _quad(integrand, w0, w1, tol)


def _top_piece(
    u0: float, u1: float, energy: float, kind: FlightKind, tol: float
) -> float:
    """Integral over ``u`` in ``[u0, u1]`` inside one top zone."""
    if energy > 0.0:
        c = math.sqrt(0.5 * energy)
        w0 = math.asinh(math.sin(0.5 * u0) / c)
        w1 = math.asinh(math.sin(0.5 * u1) / c)
    elif energy < 0.0:
        if u1 <= 0.0:
            u0, u1 = -u1, -u0
        c = math.sqrt(-0.5 * energy)
        if math.sin(0.5 * u0) < c * (1.0 - 1e-12):
            msg = f"interval [{u0:.6g}, {u1:.6g}] reaches past the turning point"
            raise QuadratureError(msg, stage="pendulum")
        w0 = math.acosh(max(math.sin(0.5 * u0) / c, 1.0))
        w1 = math.acosh(max(math.sin(0.5 * u1) / c, 1.0))
    else:
        msg = "flight integrals through a top zone need E != 0"
        raise QuadratureError(msg, stage="pendulum")
    return _top_w_integral(w0, w1, energy, kind, tol)


def _bottom_piece(
    x0: float, x1: float, energy: float, kind: FlightKind, tol: float
) -> float:
    """Direct integral over a bottom-zone interval."""
    exponent = _EXPONENTS[kind]

    def integrand(x: float) -> float:
        delta = 2.0 * energy + 4.0 * math.cos(0.5 * x) ** 2
        return delta**exponent

    return _quad(integrand, x0, x1, tol)


def _zone_integral(
    x0: float, x1: float, energy: float, kind: FlightKind, tol: float
) -> float:
    """Integral over ``[x0, x1]`` of less than one period, split by zones."""
    breaks = [x0]
    j = math.floor((x0 - HALF_PI) / math.pi) + 1
    while True:
        cut = HALF_PI + math.pi * j
        if cut >= x1:
            break
        breaks.append(cut)
        j += 1
    breaks.append(x1)

    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:], strict=True):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        top = top_of(mid)
        if abs(mid - top) <= HALF_PI:
            total += _top_piece(lo - top, hi - top, energy, kind, tol)
        else:
            total += _bottom_piece(lo, hi, energy, kind, tol)
    return total


@lru_cache(maxsize=4096)
def period_integral(energy: float, kind: FlightKind, tol: float) -> float:
    """
    Integral over one full revolution at positive energy.

    Args:
        energy: Pendulum energy, must be positive
        kind: Integrand selector
        tol: Relative quadrature tolerance

    Returns:
        ``int_{-pi}^{pi} (2(E - V))**s dx``
    """
    if energy <= 0.0:
        msg = f"a full revolution requires E > 0, got {energy!r}"
        raise QuadratureError(msg, stage="pendulum")
    return _zone_integral(HALF_PI, HALF_PI + TWO_PI, energy, kind, tol)


def flight_integral(
    x0: float,
    x1: float,
    energy: float,
    kind: FlightKind = FlightKind.TIME,
    tol: float | None = None,
) -> float:
    """
    Integrate ``(2(E - V(x)))**s`` over a monotone stretch ``x0 <= x <= x1``.

    The energy must exceed ``V`` in the interior of the stretch; an endpoint
    may be a turning point (``E = V``) for the time and action kinds.

    Args:
        x0: Lower end
        x1: Upper end
        energy: Pendulum energy
        kind: Integrand selector
        tol: Relative quadrature tolerance

    Returns:
        Value of the integral

    Raises:
        QuadratureError: If the stretch is reversed or crosses a forbidden region
    """
    tol = settings.DEFAULT_QUAD_TOL if tol is None else tol
    if x1 < x0:
        msg = f"flight stretch must be increasing, got [{x0!r}, {x1!r}]"
        raise QuadratureError(msg, stage="pendulum")
    if 0.0 < abs(energy) < MIN_ABS_ENERGY:
        msg = f"|E| = {abs(energy):.3g} is below the representable range"
        raise QuadratureError(msg, stage="pendulum")
    revolutions = math.floor((x1 - x0) / TWO_PI)
    total = 0.0
    if revolutions > 0:
        total += revolutions * period_integral(energy, kind, tol)
        x0 += revolutions * TWO_PI
    return total + _zone_integral(x0, x1, energy, kind, tol)


def turning_integral(
    x0: float,
    top: float,
    energy: float,
    kind: FlightKind = FlightKind.TIME,
    tol: float | None = None,
) -> float:
    """
    Integrate ``(2(E - V(x)))**s`` from ``x0`` to the turning point below ``top``.

    The top-zone part is integrated in the ``w`` variable from ``w = 0``, the
    turning point itself, so the result stays accurate when the turning point
    is closer to the top than the spacing of floats near ``top``.

    Args:
        x0: Start of the climb, with ``top - 2 pi < x0 <= top``
        top: The top the motion turns below
        energy: Negative pendulum energy with ``V(x0) <= energy``
        kind: Integrand selector, time or action
        tol: Relative quadrature tolerance

    Returns:
        Value of the integral, 0 when ``x0`` is the turning point

    Raises:
        QuadratureError: If the energy is out of range or below ``V(x0)``
    """
    tol = settings.DEFAULT_QUAD_TOL if tol is None else tol
    if not -2.0 < energy < 0.0:
        msg = f"a turning point needs -2 < E < 0, got {energy!r}"
        raise QuadratureError(msg, stage="pendulum")
    if energy > -MIN_ABS_ENERGY:
        msg = f"|E| = {abs(energy):.3g} is below the representable range"
        raise QuadratureError(msg, stage="pendulum")
    u_far = top - x0
    if not 0.0 <= u_far < TWO_PI:
        msg = f"start {x0!r} is not below the top {top!r}"
        raise QuadratureError(msg, stage="pendulum")
    c = math.sqrt(-0.5 * energy)
    if c > _SIN_QUARTER:
        # the turning point sits in the bottom zone, away from the top
        u_turn = 2.0 * math.asin(min(c, 1.0))
        if not u_turn * (1.0 - 1e-12) <= u_far <= TWO_PI - u_turn:
            msg = f"energy {energy!r} lies below the potential at {x0!r}"
            raise QuadratureError(msg, stage="pendulum")
        return _zone_integral(x0, top - u_turn, energy, kind, tol)
    total = 0.0
    if u_far > HALF_PI:
        total += _zone_integral(x0, top - HALF_PI, energy, kind, tol)
        u_far = HALF_PI
    ratio = math.sin(0.5 * u_far) / c
    if ratio < 1.0 - 1e-9:
        msg = f"energy {energy!r} lies below the potential at {x0!r}"
        raise QuadratureError(msg, stage="pendulum")
    w_far = math.acosh(max(ratio, 1.0))
    return total + _top_w_integral(0.0, w_far, energy, kind, tol)
