"""
Two-segment functional around one break point.

For a break point ``x`` on a section with fixed neighbours ``p_prev`` and
``p_next``, ``S(x) = L(p_prev, x) + L(x, p_next)``. Its gradient is the jump
``v_in - v_out`` of the segment velocities at ``x``, restricted to the free
coordinates of the section; the facilitator coordinate is pinned.
"""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from app.services.itinerary import Section
from app.services.jacobi import SegmentSolution, coupled_connect
from app.services.lattice import CouplingParams, LensMask
from app.services.lattice.coupling import FloatArray

LensMode = Literal["with-lens", "truncated"]


@dataclass(frozen=True)
class SectionChart:
    """Local coordinates of a section: active pair first, then sleepers."""

    section: Section

    @property
    def free(self) -> list[int]:
        """Sites carried by the local coordinates."""
        return list(self.section.free_sites)

    @property
    def dim(self) -> int:
        """Number of local coordinates."""
        return len(self.section.free_sites)

    def to_point(self, u: FloatArray) -> FloatArray:
        """Configuration with local coordinates ``u``."""
        x = np.array(self.section.center, dtype=float)
        x[self.free] += u
        return x

    def to_local(self, x: FloatArray) -> FloatArray:
        """Local coordinates of a configuration on the section."""
        return np.asarray(x, dtype=float)[self.free] - self.section.center[self.free]

    def restrict(self, v: FloatArray) -> FloatArray:
        """Components of a vector along the free coordinates."""
        return np.asarray(v, dtype=float)[self.free]

    def margin(self, u: FloatArray) -> float:
        """Distance of ``u`` from the section boundary; negative outside."""
        return self.section.margin(self.to_point(u))

    def max_step(self, u: FloatArray, step: FloatArray) -> float:
        """
        Largest ``a`` with ``u + a step`` still on the section.

        Args:
            u: Local coordinates inside the section
            step: Search direction

        Returns:
            The step fraction, ``inf`` for a zero direction
        """
        limit = math.inf
        a, b = u[:2], step[:2]
        bb = float(b @ b)
        if bb > 0.0:
            ab = float(a @ b)
            disc = ab**2 - bb * (float(a @ a) - self.section.rho_v**2)
            limit = (-ab + math.sqrt(max(disc, 0.0))) / bb
        for uk, sk in zip(u[2:], step[2:], strict=True):
            if sk != 0.0:
                room = self.section.rho_h - math.copysign(1.0, sk) * uk
                limit = min(limit, max(room, 0.0) / abs(sk))
        return limit


def section_lens(section: Section) -> LensMask:
    """
    The lens whose centre is the centre of ``section``.

    The active pair and the facilitator are consecutive sites whose middle one
    is the receiver, so the lens belongs to the receiver's triple.
    """
    site = section.roles.receiver
    p = section.p
    triple = section.center[[(site - 1) % p, site, (site + 1) % p]]
    point = np.rint(triple / (2.0 * math.pi)).astype(int)
    return LensMask(site, (int(point[0]), int(point[1]), int(point[2])))


def mode_coupling(
    cp: CouplingParams | None, section: Section, lens_mode: LensMode
) -> CouplingParams | None:
    """Coupling seen by the two segments at ``section`` in the given mode."""
    if cp is None or lens_mode == "with-lens":
        return cp
    if lens_mode != "truncated":
        msg = f"unknown lens mode {lens_mode!r}"
        raise ValueError(msg)
    return cp.with_masks((*cp.masks, section_lens(section)))


@dataclass(frozen=True, eq=False)
class LocalFunctional:
    """Value and section gradient of the two-segment functional."""

    value: float
    gradient: FloatArray
    incoming: SegmentSolution
    outgoing: SegmentSolution

    @property
    def jump(self) -> FloatArray:
        """Full velocity jump ``v_in - v_out`` at the break point."""
        return self.incoming.v_end - self.outgoing.v_start


def local_functional(
    p_prev: FloatArray,
    x: FloatArray,
    p_next: FloatArray,
    section: Section,
    cp: CouplingParams | None,
    lens_mode: LensMode = "with-lens",
    tol: float = 1e-9,
    integrator_tol: float | None = None,
    incoming: SegmentSolution | None = None,
) -> LocalFunctional:
    """
    Evaluate ``S`` (or the truncated ``S0``) at a break point.

    Args:
        p_prev: Previous break point
        x: Break point on ``section``
        p_next: Next break point
        section: Section carrying ``x``
        cp: Coupling parameters, ``None`` for the uncoupled lattice
        lens_mode: ``"with-lens"`` for ``S``; ``"truncated"`` removes the lens at
            the section centre for ``S0``
        tol: Landing tolerance of the coupled segments
        integrator_tol: Tolerance of their outer integrations
        incoming: Already solved segment ``p_prev -> x`` in the same mode

    Returns:
        Value, gradient over the section coordinates and both segments
    """
    coupling = mode_coupling(cp, section, lens_mode)
    if incoming is None:
        incoming = coupled_connect(
            p_prev, x, coupling, tol=tol, integrator_tol=integrator_tol
        )
    outgoing = coupled_connect(
        x, p_next, coupling, tol=tol, integrator_tol=integrator_tol
    )
    chart = SectionChart(section)
    return LocalFunctional(
        value=incoming.length + outgoing.length,
        gradient=chart.restrict(incoming.v_end - outgoing.v_start),
        incoming=incoming,
        outgoing=outgoing,
    )


def cancellation_bounds(
    local: LocalFunctional, section: Section
) -> list[tuple[float, float]]:
    """
    Gradient of the active pair against the energy-change bound.

    For each active site returns ``(|dS/dx_i|, sqrt(2 |E_in - E_out|))``; the
    first never exceeds the second when both segments cross the site in the
    same direction.
    """
    out = []
    for site in section.active_pair:
        jump = abs(float(local.jump[site]))
        change = abs(local.incoming.energies[site] - local.outgoing.energies[site])
        out.append((jump, math.sqrt(2.0 * float(change))))
    return out
