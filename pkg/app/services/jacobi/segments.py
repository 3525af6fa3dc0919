"""
Energy-one connecting orbits of the uncoupled lattice.

Without coupling every site is an independent pendulum, so an orbit from
``q`` to ``q_end`` is a tuple of pendulum arcs sharing one duration ``T``.
The total energy ``sum E_i(T)`` decreases in ``T``; the unique ``T`` with total
energy one is found by Brent's method on ``ln T``.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from app.services.lattice import potential_energy
from app.services.lattice.coupling import FloatArray
from app.services.pendulum import (
    PendulumArc,
    arc_action,
    bvp_solve,
    classify_boundary,
    sensitivity_identities,
    stiffness_K,
)
from app.utils.exceptions import BracketError

logger = logging.getLogger(__name__)

TOTAL_ENERGY = 1.0

_MAX_BRACKET_STEPS = 80
_ROOT_NOISE = 1e-10


@dataclass(frozen=True, eq=False)
class SegmentSolution:
    """
    Energy-one orbit between two configurations.

    ``arcs`` holds the per-site pendulum arcs of the uncoupled model (for a
    coupled segment, those of its uncoupled middle piece).
    """

    q: FloatArray
    q_end: FloatArray
    T: float
    energies: FloatArray
    length: float
    v_start: FloatArray
    v_end: FloatArray
    coupled: bool = False
    arcs: tuple[PendulumArc, ...] = ()
    residual_history: list[float] = field(default_factory=list)

    @property
    def p(self) -> int:
        """Number of sites."""
        return int(self.q.size)


def _as_config(q: FloatArray) -> FloatArray:
    arr = np.array(q, dtype=float)
    if arr.ndim != 1:
        msg = f"a configuration must be 1-D, got shape {arr.shape}"
        raise ValueError(msg)
    return arr


def _solve_arcs(
    q: FloatArray,
    q_end: FloatArray,
    T: float,
    hints: list[float | None],
) -> list[PendulumArc]:
    arcs = []
    for i, (a, b) in enumerate(zip(q, q_end, strict=True)):
        arc = bvp_solve(float(a), float(b), None, T, energy_hint=hints[i])
        hints[i] = arc.E
        arcs.append(arc)
    return arcs


def _initial_time(q: FloatArray, q_end: FloatArray) -> float:
    # unit kinetic energy spread over the displacement
    return max(float(np.linalg.norm(q_end - q)) / math.sqrt(2.0), 1e-3)


def _refine_duration(
    excess: Callable[[float], float],
    lo: float,
    hi: float,
    *ends: tuple[float, float],
) -> float:
    """Root of ``excess`` in ``[lo, hi]``; ``ends`` are the bracket evaluations."""
    try:
        return float(brentq(excess, lo, hi, xtol=1e-15, rtol=1e-15))
    except ValueError as e:
        # re-evaluated ends disagree in sign only when one end is a root to noise
        z_best, f_best = min(ends, key=lambda end: abs(end[1]))
        if abs(f_best) < _ROOT_NOISE:
            return z_best
        msg = f"duration refinement failed: {e}"
        raise BracketError(msg, (math.exp(lo), math.exp(hi)), stage="jacobi") from e
    except RuntimeError as e:
        msg = f"duration refinement failed: {e}"
        raise BracketError(msg, (math.exp(lo), math.exp(hi)), stage="jacobi") from e


def uncoupled_connect(
    q: FloatArray, q_end: FloatArray, time_hint: float | None = None
) -> SegmentSolution:
    """
    Connect two configurations by an energy-one orbit of the uncoupled lattice.

    Args:
        q: Start configuration
        q_end: End configuration
        time_hint: Duration of a nearby segment, narrows the initial bracket

    Returns:
        The unique connecting segment

    Raises:
        InadmissibleBoundaryError: If a coordinate pair is inadmissible
        BracketError: If no duration gives total energy one
    """
    q, q_end = _as_config(q), _as_config(q_end)
    if q.shape != q_end.shape:
        msg = f"endpoint shapes differ: {q.shape} and {q_end.shape}"
        raise ValueError(msg)
    for a, b in zip(q, q_end, strict=True):
        classify_boundary(float(a), float(b))

    hints: list[float | None] = [None] * q.size

    def excess(z: float) -> float:
        arcs = _solve_arcs(q, q_end, math.exp(z), hints)
        return sum(arc.E for arc in arcs) - TOTAL_ENERGY

    z0 = math.log(time_hint or _initial_time(q, q_end))
    step = 1e-3 if time_hint else math.log(2.0)
    f0 = excess(z0)
    steps = 0
    if f0 == 0.0:
        z = z0
    else:
        # excess decreases in z: move away from z0 until the sign flips
        direction = 1.0 if f0 > 0.0 else -1.0
        z_far, f_far = z0, f0
        while f_far * f0 > 0.0:
            z_far += direction * min(step * 2**steps, 2.0)
            f_far = excess(z_far)
            steps += 1
            if steps > _MAX_BRACKET_STEPS:
                side = "above" if f0 > 0.0 else "below"
                msg = f"total energy stays {side} one over every duration tried"
                ends = sorted((math.exp(z0), math.exp(z_far)))
                raise BracketError(msg, (ends[0], ends[1]), stage="jacobi")
        lo, hi = sorted((z0, z_far))
        if f_far == 0.0:
            z = z_far
        else:
            z = _refine_duration(excess, lo, hi, (z0, f0), (z_far, f_far))
    T = math.exp(z)
    arcs = _solve_arcs(q, q_end, T, hints)
    logger.debug(f"uncoupled segment: T={T:.12g} after {steps} bracket steps")
    return _segment_from_arcs(q, q_end, T, arcs)


def _segment_from_arcs(
    q: FloatArray, q_end: FloatArray, T: float, arcs: list[PendulumArc]
) -> SegmentSolution:
    return SegmentSolution(
        q=q,
        q_end=q_end,
        T=T,
        energies=np.array([arc.E for arc in arcs]),
        length=float(sum(arc_action(arc) for arc in arcs)),
        v_start=np.array([arc.v0 for arc in arcs]),
        v_end=np.array([arc.v1 for arc in arcs]),
        arcs=tuple(arcs),
    )


def energy_vector(q: FloatArray, q_end: FloatArray) -> FloatArray:
    """
    Per-site energies of the energy-one orbit from ``q`` to ``q_end``.

    Args:
        q: Start configuration
        q_end: End configuration

    Returns:
        Energy vector
    """
    return uncoupled_connect(q, q_end).energies


def segment_length(seg: SegmentSolution) -> float:
    """Abbreviated action ``int |x'|^2 dt`` of a segment."""
    return seg.length


def length_gradient(seg: SegmentSolution, which_end: str) -> FloatArray:
    """
    Gradient of the segment length with respect to one endpoint.

    At fixed total energy the abbreviated action changes by the momentum at
    the moving end: ``dL/dq_end = v_end`` and ``dL/dq = -v_start``.

    Args:
        seg: Segment
        which_end: ``"start"`` or ``"end"``

    Returns:
        Gradient vector

    Raises:
        ValueError: If ``which_end`` is not recognised
    """
    if which_end == "end":
        return seg.v_end.copy()
    if which_end == "start":
        return -seg.v_start
    msg = f"which_end must be 'start' or 'end', got {which_end!r}"
    raise ValueError(msg)


def speed_squared_defect(seg: SegmentSolution) -> float:
    """Deviation of ``|v_start|^2`` from ``2(1 - U(q))`` for the uncoupled model."""
    kinetic = float(np.dot(seg.v_start, seg.v_start))
    return abs(kinetic - 2.0 * (TOTAL_ENERGY - potential_energy(seg.q, None)))


def stiffness_vector(seg: SegmentSolution) -> FloatArray:
    """
    Stiffness ``K_i = -dE_i/dT`` of every arc of an uncoupled segment.

    Args:
        seg: Uncoupled segment whose arcs all stay above their end potentials

    Returns:
        Per-site stiffness
    """
    return np.array([stiffness_K(arc.alpha, arc.beta_end, arc.E) for arc in seg.arcs])


def time_gradient(seg: SegmentSolution) -> FloatArray:
    """
    Derivative of the segment duration with respect to the start point.

    Uses ``dT/dq_i = K^{-1} dX'_i/dT`` with ``K = sum K_s``.

    Args:
        seg: Uncoupled segment of monotone arcs

    Returns:
        ``dT/dq``
    """
    total = float(stiffness_vector(seg).sum())
    return np.array([sensitivity_identities(arc, total).dT_dx for arc in seg.arcs])


def _rotate_towards(direction: FloatArray, angle: float) -> FloatArray:
    """Rotate a unit vector by ``angle`` in a fixed plane containing it."""
    k = int(np.argmin(np.abs(direction)))
    other = np.zeros_like(direction)
    other[k] = 1.0
    other -= np.dot(other, direction) * direction
    other /= np.linalg.norm(other)
    return math.cos(angle) * direction + math.sin(angle) * other


def energy_vector_stability(
    q: FloatArray,
    direction: FloatArray,
    length: float,
    deltas: list[float],
) -> list[tuple[float, float]]:
    """
    Change of the energy vector under small turns of a long segment.

    For each angle ``delta`` the segments ``q -> q + length e`` and
    ``q -> q + length e'`` with ``|e' - e| ~ delta`` are compared.

    Args:
        q: Common start configuration
        direction: Reference direction
        length: Segment length in configuration space
        deltas: Turning angles

    Returns:
        ``(delta, |E(q, q + length e') - E(q, q + length e)|)`` pairs
    """
    q = _as_config(q)
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    reference = energy_vector(q, q + length * e)
    results = []
    for delta in deltas:
        turned = energy_vector(q, q + length * _rotate_towards(e, delta))
        change = float(np.linalg.norm(turned - reference))
        logger.debug(f"energy vector change {change:.3e} at angle {delta:.1e}")
        results.append((float(delta), change))
    return results
