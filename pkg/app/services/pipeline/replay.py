"""
Replay a minimized broken geodesic under the full lattice dynamics.

Each segment is integrated until the facilitator of the next section reaches
its pinned value. In ``"segments"`` mode every segment restarts from its break
point with its own initial velocity (multiple shooting); in ``"continuous"``
mode, the default, the crossing state of one segment is the initial state of
the next.
Site energies at the crossings are compared with the path designation.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel

from app.config import settings
from app.services.itinerary import Itinerary, Section
from app.services.jacobi import TOTAL_ENERGY, SegmentSolution
from app.services.lattice import (
    CouplingParams,
    LatticeState,
    hamiltonian,
    lattice_flow,
    site_energies,
)
from app.services.lattice.coupling import FloatArray
from app.services.lattice.integrators import EventFunction
from app.services.minimizer import BrokenGeodesic
from app.utils.exceptions import ReplayDeviationError

logger = logging.getLogger(__name__)

ReplayMode = Literal["segments", "continuous"]

# Integration window of a segment, in units of its own travel time
HORIZON_FACTOR = 1.5
# Crossings this far outside a section still count as inside its tube
TUBE_SLACK = 0.05


class PathCrossing(BaseModel):
    """Energies at a crossing that carries a path position."""

    section: int
    position: int
    expected_carrier: int
    observed_carrier: int
    carrier_energy: float
    off_carrier_max: float
    follows_path: bool


class RunReport(BaseModel):
    """Machine-readable outcome of a replay."""

    replay_mode: ReplayMode
    crossing_times: list[float]
    crossing_energies: list[list[float]]
    step_times: list[float]
    step_time_scale: float
    path_crossings: list[PathCrossing]
    carrier_deviation: float
    off_carrier_max: float
    off_carrier_limit: float
    measured_c: float
    arrival_mismatches: list[float]
    drift: float
    drift_budget: float
    energy_offset: float
    carriers_follow_path: bool
    certification_passed: bool | None = None
    certification_failures: list[str] = []
    passed: bool


@dataclass(eq=False)
class ReplayTrace:
    """Report of a replay together with its sampled states."""

    report: RunReport
    times: FloatArray
    states: FloatArray
    energies: FloatArray
    totals: FloatArray


@dataclass(frozen=True)
class _Leg:
    times: FloatArray
    states: FloatArray
    crossing_time: float
    crossing: FloatArray


def _event_for(target: Section, seg: SegmentSolution) -> EventFunction:
    f = target.facilitator
    level = float(target.center[f])

    def crossing(_t: float, z: FloatArray) -> float:
        return float(z[f] - level)

    crossing.terminal = True  # type: ignore[attr-defined]
    crossing.direction = float(np.sign(seg.v_end[f]))  # type: ignore[attr-defined]
    return crossing


def _closest_approach(states: FloatArray, target: Section) -> float:
    f = target.facilitator
    return float(np.min(np.abs(states[:, f] - target.center[f])))


def _replay_leg(
    state: LatticeState,
    t0: float,
    seg: SegmentSolution,
    target: Section,
    index: int,
    cp: CouplingParams | None,
    method: Literal["rk", "symplectic"],
    tol: float,
    samples: int,
) -> _Leg:
    """Integrate one segment up to the crossing of ``target``."""
    if method == "symplectic":
        traj = lattice_flow(state, cp, (t0, t0 + seg.T), tol, method="symplectic")
        return _Leg(traj.times[:-1], traj.states[:-1], t0 + seg.T, traj.states[-1])

    t1 = t0 + HORIZON_FACTOR * seg.T
    t_eval = np.linspace(t0, t1, max(2, math.ceil(HORIZON_FACTOR * samples)) + 1)
    event = _event_for(target, seg)
    traj = lattice_flow(state, cp, (t0, t1), tol, events=[event], t_eval=t_eval)
    if not traj.event_times or traj.event_times[0].size == 0:
        closest = _closest_approach(traj.states, target)
        msg = (
            f"segment {index} never reached section {index + 1} "
            f"(closest approach {closest:.3e})"
        )
        raise ReplayDeviationError(msg, stage="replay")
    crossing_time = float(traj.event_times[0][0])
    crossing = np.asarray(traj.event_states[0][0], dtype=float)
    keep = traj.times < crossing_time
    return _Leg(traj.times[keep], traj.states[keep], crossing_time, crossing)


def _path_crossings(
    itin: Itinerary, energies: list[FloatArray]
) -> list[tuple[int, int]]:
    """Sections that carry a path position, paired with that position."""
    last = len(itin.sections) - 1
    pairs = [(0, itin.path[0])]
    pairs += [(b, itin.path[k + 1]) for k, b in enumerate(itin.string_boundaries)]
    pairs.append((last, itin.path[-1]))
    return [(j, pos) for j, pos in pairs if j < len(energies)]


def _crossing_record(
    section: int, position: int, energies: FloatArray, p: int
) -> PathCrossing:
    expected = position % p
    observed = int(np.argmax(energies))
    others = np.delete(energies, expected)
    return PathCrossing(
        section=section,
        position=position,
        expected_carrier=expected,
        observed_carrier=observed,
        carrier_energy=float(energies[expected]),
        off_carrier_max=float(np.max(np.abs(others))),
        follows_path=observed == expected,
    )


def replay_trace(
    bg: BrokenGeodesic,
    itin: Itinerary,
    cp: CouplingParams | None,
    tol: float | None = None,
    *,
    mode: ReplayMode = "continuous",
    method: Literal["rk", "symplectic"] = "rk",
    drift_budget: float | None = None,
    off_carrier_multiple: float = 4.0,
    samples_per_segment: int = 64,
) -> ReplayTrace:
    """
    Replay ``bg`` and record site energies at every section crossing.

    Args:
        bg: Minimized broken geodesic of ``itin``
        itin: Itinerary the geodesic was minimized on
        cp: Coupling parameters it was minimized with
        tol: Integrator tolerance
        mode: ``"continuous"`` follows one orbit; ``"segments"`` restarts
            every segment at its break point
        method: ``"rk"`` locates crossings by events; ``"symplectic"``
            integrates each segment over its own travel time
        drift_budget: Allowed Hamiltonian drift per unit time
        off_carrier_multiple: Allowed off-carrier energy in units of ``sqrt(eps)``
        samples_per_segment: Uniform samples per segment travel time

    Returns:
        The report and the sampled trajectory

    Raises:
        ReplayDeviationError: If a section is missed, a crossing leaves its
            tube or the drift budget is exceeded
    """
    tol = settings.DEFAULT_INTEGRATOR_TOL if tol is None else tol
    budget = settings.DEFAULT_DRIFT_BUDGET if drift_budget is None else drift_budget
    eps = cp.eps if cp is not None else itin.sections[0].rho_v ** 2
    p = itin.sections[0].p

    start = LatticeState(bg.points[0], bg.segments[0].v_start)
    crossing_times = [0.0]
    crossing_states = [start.to_vector()]
    chunks_t: list[FloatArray] = []
    chunks_z: list[FloatArray] = []
    mismatches: list[float] = []
    drift = 0.0
    t = 0.0
    state = start

    for j, seg in enumerate(bg.segments):
        if mode == "segments":
            state = LatticeState(bg.points[j], seg.v_start)
        target = bg.sections[j + 1]
        leg = _replay_leg(
            state, t, seg, target, j, cp, method, tol, samples_per_segment
        )
        x_cross = leg.crossing[:p]
        if target.margin(x_cross) < -TUBE_SLACK * min(target.rho_v, target.rho_h):
            msg = (
                f"crossing {j + 1} left its section tube "
                f"(margin {target.margin(x_cross):.3e})"
            )
            raise ReplayDeviationError(msg, stage="replay")
        h0 = hamiltonian(state, cp)
        leg_energy = np.array(
            [
                hamiltonian(LatticeState.from_vector(z), cp)
                for z in (*leg.states, leg.crossing)
            ]
        )
        leg_drift = float(np.max(np.abs(leg_energy - h0)))
        allowed = budget * max(leg.crossing_time - t, 1.0)
        if leg_drift > allowed:
            msg = f"drift {leg_drift:.3e} on segment {j} exceeds budget {allowed:.3e}"
            raise ReplayDeviationError(msg, stage="replay")
        drift = max(drift, leg_drift)
        mismatches.append(float(np.linalg.norm(x_cross - bg.points[j + 1])))
        chunks_t.append(leg.times)
        chunks_z.append(leg.states)
        crossing_times.append(leg.crossing_time)
        crossing_states.append(leg.crossing)
        logger.debug(
            f"Segment {j}: crossing at t={leg.crossing_time:.6g}, "
            f"mismatch {mismatches[-1]:.3e}"
        )
        t = leg.crossing_time
        state = LatticeState.from_vector(leg.crossing)

    times = np.concatenate([*chunks_t, [t]])
    states = np.vstack([*chunks_z, crossing_states[-1][None, :]])
    totals = np.array([hamiltonian(LatticeState.from_vector(z), cp) for z in states])
    energies = np.array([site_energies(LatticeState.from_vector(z)) for z in states])
    at_crossings = [
        site_energies(LatticeState.from_vector(z)) for z in crossing_states
    ]
    records = [
        _crossing_record(j, pos, at_crossings[j], p)
        for j, pos in _path_crossings(itin, at_crossings)
    ]

    scale = math.sqrt(eps)
    carrier_deviation = max(abs(r.carrier_energy - TOTAL_ENERGY) for r in records)
    off_carrier_max = max(r.off_carrier_max for r in records)
    limit = off_carrier_multiple * scale
    follows = all(r.follows_path for r in records)
    r_exp = cp.r if cp is not None else settings.DEFAULT_R
    report = RunReport(
        replay_mode=mode,
        crossing_times=crossing_times,
        crossing_energies=[e.tolist() for e in at_crossings],
        step_times=list(np.diff(crossing_times)),
        step_time_scale=eps ** (-4 * r_exp - 8),
        path_crossings=records,
        carrier_deviation=carrier_deviation,
        off_carrier_max=off_carrier_max,
        off_carrier_limit=limit,
        measured_c=max(carrier_deviation, off_carrier_max) / scale,
        arrival_mismatches=mismatches,
        drift=drift,
        drift_budget=budget,
        energy_offset=float(np.max(np.abs(totals - TOTAL_ENERGY))),
        carriers_follow_path=follows,
        passed=follows and off_carrier_max < limit,
    )
    logger.info(
        f"Replayed {len(bg.segments)} segments ({mode}): carriers "
        f"{'follow' if follows else 'do not follow'} the path, "
        f"off-carrier max {off_carrier_max:.3e}, drift {drift:.3e}"
    )
    return ReplayTrace(
        report=report, times=times, states=states, energies=energies, totals=totals
    )


def replay(
    bg: BrokenGeodesic,
    itin: Itinerary,
    cp: CouplingParams | None,
    tol: float | None = None,
    mode: ReplayMode = "continuous",
) -> RunReport:
    """Replay ``bg`` and return only its report; see ``replay_trace``."""
    return replay_trace(bg, itin, cp, tol, mode=mode).report
