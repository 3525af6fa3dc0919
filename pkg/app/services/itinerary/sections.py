"""Sections of configuration space and the role of every site on them."""

import math
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

from app.services.lattice.coupling import FloatArray

TWO_PI = 2.0 * math.pi


class Role(StrEnum):
    """Part a site plays while the orbit crosses a section."""

    ACTIVE = "active"
    FACILITATOR = "facilitator"
    SLEEPER = "sleeper"


# Offset of a site's section coordinate from 0 (mod 2 pi)
ROLE_OFFSETS: dict[Role, float] = {
    Role.ACTIVE: 0.0,
    Role.FACILITATOR: 0.0,
    Role.SLEEPER: math.pi,
}


@dataclass(frozen=True)
class EdgeRoles:
    """Role assignment implied by one step of the path."""

    donor: int
    receiver: int
    facilitator: int
    p: int

    @property
    def active_pair(self) -> tuple[int, int]:
        """The transfer pair in increasing site order."""
        a, b = sorted((self.donor, self.receiver))
        return a, b

    @property
    def sleepers(self) -> tuple[int, ...]:
        """Every site that is neither active nor the facilitator."""
        busy = {self.donor, self.receiver, self.facilitator}
        return tuple(i for i in range(self.p) if i not in busy)

    def role(self, site: int) -> Role:
        """Role of ``site``."""
        if site == self.facilitator:
            return Role.FACILITATOR
        if site in (self.donor, self.receiver):
            return Role.ACTIVE
        return Role.SLEEPER

    @property
    def roles(self) -> tuple[Role, ...]:
        """Role of every site."""
        return tuple(self.role(i) for i in range(self.p))


def edge_roles(sigma: int, sigma_next: int, p: int) -> EdgeRoles:
    """
    Roles for the path step ``sigma -> sigma_next``.

    A right step moves energy from site ``sigma`` to ``sigma + 1`` with the
    facilitator ``sigma + 2``; a left step mirrors this, with the facilitator
    ``sigma - 2``. Indices are taken mod ``p``.

    Args:
        sigma: Current path position
        sigma_next: Next path position
        p: Number of sites

    Returns:
        The role assignment

    Raises:
        ValueError: If the step is not a unit step or ``p < 4``
    """
    if p < 4:
        msg = f"a lattice needs at least 4 sites, got {p}"
        raise ValueError(msg)
    step = sigma_next - sigma
    if abs(step) != 1:
        msg = f"path step {sigma} -> {sigma_next} is not a unit step"
        raise ValueError(msg)
    return EdgeRoles(
        donor=sigma % p,
        receiver=sigma_next % p,
        facilitator=(sigma + 2 * step) % p,
        p=p,
    )


@dataclass(frozen=True, eq=False)
class Section:
    """
    Codimension-one disk crossed by the orbit.

    The facilitator coordinate is pinned to its centre value, the active pair
    ranges over a disk of radius ``rho_v`` and each sleeper over a window of
    half-width ``rho_h`` around its top.
    """

    center: FloatArray
    roles: EdgeRoles
    rho_v: float
    rho_h: float

    @property
    def p(self) -> int:
        """Number of sites."""
        return self.roles.p

    @property
    def facilitator(self) -> int:
        """Pinned site."""
        return self.roles.facilitator

    @property
    def active_pair(self) -> tuple[int, int]:
        """Transfer pair."""
        return self.roles.active_pair

    @property
    def sleepers(self) -> tuple[int, ...]:
        """Sites parked near their tops."""
        return self.roles.sleepers

    @property
    def free_sites(self) -> tuple[int, ...]:
        """Coordinates that vary over the section: active pair, then sleepers."""
        return self.active_pair + self.sleepers

    def vertical_margin(self, x: FloatArray) -> float:
        """Distance of the active pair from the rim of its disk."""
        a, b = self.active_pair
        r = math.hypot(x[a] - self.center[a], x[b] - self.center[b])
        return self.rho_v - r

    def horizontal_margin(self, x: FloatArray) -> float:
        """Distance of the sleepers from the ends of their windows."""
        if not self.sleepers:
            return math.inf
        idx = list(self.sleepers)
        return float(self.rho_h - np.max(np.abs(x[idx] - self.center[idx])))

    def margin(self, x: FloatArray) -> float:
        """Smallest distance to the section boundary; negative outside."""
        return min(self.vertical_margin(x), self.horizontal_margin(x))

    def contains(self, x: FloatArray) -> bool:
        """Whether ``x`` lies on the section (boundary included)."""
        pinned = abs(x[self.facilitator] - self.center[self.facilitator]) < 1e-12
        return pinned and self.margin(x) >= 0.0


def section_center(roles: EdgeRoles, lift: FloatArray | None = None) -> FloatArray:
    """
    Centre of a section with the given roles.

    Args:
        roles: Role assignment
        lift: Integer multiples of ``2 pi`` added to every site

    Returns:
        Configuration with active and facilitator sites at 0 and sleepers at pi
    """
    center = np.array([ROLE_OFFSETS[role] for role in roles.roles])
    if lift is not None:
        center += TWO_PI * np.asarray(lift, dtype=float)
    return center


def section_for(
    sigma: int,
    sigma_next: int,
    p: int,
    eps: float,
    center: FloatArray | None = None,
    rho_v: float | None = None,
    rho_h: float | None = None,
) -> Section:
    """
    Section crossed while the path steps from ``sigma`` to ``sigma_next``.

    Args:
        sigma: Current path position
        sigma_next: Next path position
        p: Number of sites
        eps: Coupling scale, sets the default radii ``sqrt(eps)``
        center: Centre configuration, defaults to the unlifted one
        rho_v: Radius of the active-pair disk
        rho_h: Half-width of the sleeper windows

    Returns:
        The section
    """
    roles = edge_roles(sigma, sigma_next, p)
    default_radius = math.sqrt(eps)
    return Section(
        center=section_center(roles) if center is None else np.asarray(center, float),
        roles=roles,
        rho_v=default_radius if rho_v is None else rho_v,
        rho_h=default_radius if rho_h is None else rho_h,
    )
