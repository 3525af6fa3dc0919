"""
Connecting orbits of the coupled lattice.

The coupling is supported in lenses around the lattice points, and the break
points of a broken geodesic sit next to them. A coupled segment ``p0 -> p1`` is
assembled from three pieces: a short piece of the full dynamics from ``p0`` to
an auxiliary section ``S0`` at distance ``eps^(1/3)`` along the uncoupled
direction, an uncoupled middle piece ``q0 -> q1``, and a short full piece from
``S1`` to ``p1``. The auxiliary points ``Q = (q0, q1)`` are the unknowns.

The middle piece fixes the velocities at ``q0`` and ``q1``; integrating the
full dynamics from there back to the plane of ``p0`` (and forward to the plane
of ``p1``) gives a landing mismatch. Velocities match by construction, so the
segment is found when the mismatch vanishes.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import null_space
from scipy.optimize import root

from app.config import settings
from app.services.jacobi.segments import SegmentSolution, uncoupled_connect
from app.services.lattice import CouplingParams, lattice_beta, lattice_forces
from app.services.lattice.coupling import FloatArray
from app.services.lattice.integrators import lens_max_step
from app.utils.exceptions import ConvergenceError, IntegrationError

logger = logging.getLogger(__name__)

AUX_EXPONENT = 1.0 / 3.0

_FIXED_POINT_ITER = 25
_LANDING_HORIZON = 6.0


@dataclass(frozen=True)
class OuterPiece:
    """Full-dynamics piece between a section plane and an auxiliary point."""

    landing: FloatArray
    velocity: FloatArray
    duration: float
    action: float


def aux_distance(eps: float) -> float:
    """Distance ``eps^(1/3)`` of the auxiliary sections from the centres."""
    return eps**AUX_EXPONENT


def _augmented_rhs(
    _: float, z: FloatArray, cp: CouplingParams | None, p: int
) -> FloatArray:
    y = z[p : 2 * p]
    return np.concatenate([y, lattice_forces(z[:p], cp), [float(np.dot(y, y))]])


def flow_to_plane(
    x0: FloatArray,
    y0: FloatArray,
    cp: CouplingParams | None,
    plane_point: FloatArray,
    normal: FloatArray,
    backward: bool,
    tol: float | None = None,
) -> OuterPiece:
    """
    Integrate the full dynamics until the plane through ``plane_point``.

    Args:
        x0: Start configuration
        y0: Start velocity
        cp: Coupling parameters
        plane_point: A point of the target plane
        normal: Plane normal
        backward: Integrate in negative time
        tol: Integrator tolerance

    Returns:
        Landing point, velocity there, elapsed time and abbreviated action

    Raises:
        IntegrationError: If the plane is not reached
    """
    tol = settings.DEFAULT_INTEGRATOR_TOL if tol is None else tol
    p = x0.size
    gap = float(np.dot(x0 - plane_point, normal))
    approach = abs(float(np.dot(y0, normal)))
    if approach == 0.0:
        msg = "velocity is parallel to the section plane"
        raise IntegrationError(msg, stage="jacobi")
    horizon = _LANDING_HORIZON * abs(gap) / approach
    energy = 0.5 * float(np.dot(y0, y0))

    def crossing(_t: float, z: FloatArray, *_args: object) -> float:
        return float(np.dot(z[:p] - plane_point, normal))

    crossing.terminal = True  # type: ignore[attr-defined]
    z0 = np.concatenate([x0, y0, [0.0]])
    sol = solve_ivp(
        _augmented_rhs,
        (0.0, -horizon if backward else horizon),
        z0,
        method="DOP853",
        rtol=tol,
        atol=tol,
        events=crossing,
        args=(cp, p),
        max_step=lens_max_step(cp, energy, p),
    )
    if sol.status < 0 or sol.t_events is None or sol.t_events[0].size == 0:
        msg = f"piece did not reach its section plane within t={horizon:.4g}"
        raise IntegrationError(msg, stage="jacobi")
    end = sol.y_events[0][0]
    return OuterPiece(
        landing=end[:p].copy(),
        velocity=end[p : 2 * p].copy(),
        duration=abs(float(sol.t_events[0][0])),
        action=abs(float(end[2 * p])),
    )


def _meets_lens(start: FloatArray, step: FloatArray, cp: CouplingParams) -> bool:
    """Whether the straight path ``start + s step``, ``0 <= s <= 1`` meets a lens."""
    samples = max(8, math.ceil(4.0 * float(np.linalg.norm(step)) / cp.eps) + 2)
    return any(
        np.any(lattice_beta(start + s * step, cp) > 0.0)
        for s in np.linspace(0.0, 1.0, samples)
    )


def coupled_connect(
    p0: FloatArray,
    p1: FloatArray,
    cp: CouplingParams | None,
    tol: float = 1e-9,
    uncoupled: SegmentSolution | None = None,
    integrator_tol: float | None = None,
) -> SegmentSolution:
    """
    Connect two configurations by an energy-one orbit of the full lattice.

    Args:
        p0: Start configuration
        p1: End configuration
        cp: Coupling parameters; ``None`` gives the uncoupled segment
        tol: Landing mismatch accepted at convergence
        uncoupled: Uncoupled segment for the same endpoints, if already solved
        integrator_tol: Tolerance of the outer-piece integrations

    Returns:
        The coupled segment; the uncoupled one if neither end meets a lens

    Raises:
        ConvergenceError: If the landing mismatch cannot be driven below ``tol``
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    base = uncoupled if uncoupled is not None else uncoupled_connect(p0, p1)
    if cp is None:
        return base

    d = aux_distance(cp.eps)
    e0 = base.v_start / np.linalg.norm(base.v_start)
    e1 = base.v_end / np.linalg.norm(base.v_end)
    if not (_meets_lens(p0, 2.0 * d * e0, cp) or _meets_lens(p1, -2.0 * d * e1, cp)):
        logger.warning(
            "coupled segment meets no lens near its ends; using the uncoupled orbit"
        )
        return base

    basis0, basis1 = null_space(e0[None, :]), null_space(e1[None, :])
    k = basis0.shape[1]
    anchor0, anchor1 = p0 + d * e0, p1 - d * e1
    last_time = [base.T]

    def evaluate(
        unknowns: FloatArray,
    ) -> tuple[FloatArray, SegmentSolution, OuterPiece, OuterPiece]:
        q0 = anchor0 + basis0 @ unknowns[:k]
        q1 = anchor1 + basis1 @ unknowns[k:]
        middle = uncoupled_connect(q0, q1, time_hint=last_time[-1])
        last_time.append(middle.T)
        back = flow_to_plane(q0, middle.v_start, cp, p0, e0, True, integrator_tol)
        fwd = flow_to_plane(q1, middle.v_end, cp, p1, e1, False, integrator_tol)
        mismatch = np.concatenate(
            [basis0.T @ (back.landing - p0), basis1.T @ (fwd.landing - p1)]
        )
        return mismatch, middle, back, fwd

    unknowns = np.zeros(2 * k)
    history: list[float] = []
    for _ in range(_FIXED_POINT_ITER):
        mismatch = evaluate(unknowns)[0]
        history.append(float(np.linalg.norm(mismatch)))
        if history[-1] < tol:
            break
        if len(history) > 2 and history[-1] > history[-3]:
            logger.debug(f"fixed-point iteration stalled at {history[-1]:.3e}")
            break
        unknowns = unknowns - mismatch

    if history[-1] >= tol:
        sol = root(lambda u: evaluate(u)[0], unknowns, method="hybr", tol=0.1 * tol)
        unknowns = np.asarray(sol.x)
        history.append(float(np.linalg.norm(sol.fun)))
        if history[-1] >= tol:
            msg = f"coupled segment did not converge (mismatch {history[-1]:.3e})"
            raise ConvergenceError(msg, history, stage="jacobi")

    _, middle, back, fwd = evaluate(unknowns)
    for label, point in (("start", middle.q), ("end", middle.q_end)):
        if np.any(lattice_beta(point, cp) > 0.0):
            logger.warning(f"auxiliary {label} point lies inside a lens")
    logger.debug(
        f"coupled segment converged in {len(history)} evaluations, "
        f"mismatch {history[-1]:.3e}"
    )
    return SegmentSolution(
        q=p0,
        q_end=p1,
        T=back.duration + middle.T + fwd.duration,
        energies=middle.energies,
        length=back.action + middle.length + fwd.action,
        v_start=back.velocity,
        v_end=fwd.velocity,
        coupled=True,
        arcs=middle.arcs,
        residual_history=history,
    )
