"""
Compile a path on the site graph into sections and translation vectors.

Each step of the path becomes a string of ``N + 1`` sections with the same
roles, joined by ``N`` in-string translations; consecutive strings are joined
by a junction translation. Every translation maps the roles of one section to
those of the next, which fixes all its entries except the ones of sites that
stay active; those are free nonzero integers chosen by an exhaustive search.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel

from app.services.itinerary.sections import (
    ROLE_OFFSETS,
    TWO_PI,
    EdgeRoles,
    Role,
    Section,
    edge_roles,
    section_center,
)
from app.services.lattice.coupling import FloatArray
from app.utils.exceptions import InfeasibleTranslationError

logger = logging.getLogger(__name__)

TransferProfile = Literal["turning", "uniform"]

# Translation entry (in units of 2 pi) for each role change; None is free
TRANSITIONS: dict[tuple[Role, Role], float | None] = {
    (Role.ACTIVE, Role.ACTIVE): None,
    (Role.FACILITATOR, Role.ACTIVE): 1.0,
    (Role.FACILITATOR, Role.FACILITATOR): 1.0,
    (Role.ACTIVE, Role.FACILITATOR): 1.0,
    (Role.ACTIVE, Role.SLEEPER): 0.5,
    (Role.SLEEPER, Role.FACILITATOR): 0.5,
    (Role.FACILITATOR, Role.SLEEPER): 0.5,
    (Role.SLEEPER, Role.ACTIVE): 0.5,
    (Role.SLEEPER, Role.SLEEPER): 0.0,
}

_TIE_TOL = 1e-12
_TURN_LO = math.pi / 8.0
_TURN_HI = 3.0 * math.pi / 8.0


@dataclass(frozen=True)
class TranslationForm:
    """Fixed entries of a translation and the sites whose entries are free."""

    base: tuple[float, ...]
    free: tuple[int, ...]

    @property
    def p(self) -> int:
        """Number of sites."""
        return len(self.base)


def translation_form(before: EdgeRoles, after: EdgeRoles) -> TranslationForm:
    """
    Shape of the translation from a section with roles ``before`` to ``after``.

    Args:
        before: Roles of the departure section
        after: Roles of the arrival section

    Returns:
        The translation form
    """
    base: list[float] = []
    free: list[int] = []
    for site, (r0, r1) in enumerate(zip(before.roles, after.roles, strict=True)):
        entry = TRANSITIONS[(r0, r1)]
        if entry is None:
            free.append(site)
            base.append(0.0)
        else:
            base.append(entry)
    return TranslationForm(tuple(base), tuple(free))


def _unit(v: FloatArray) -> FloatArray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _candidates(form: TranslationForm, radius: int) -> FloatArray:
    values = np.concatenate(
        [np.arange(-radius, 0), np.arange(1, radius + 1)]
    ).astype(float)
    grids = np.meshgrid(*([values] * len(form.free)), indexing="ij")
    out = np.tile(np.asarray(form.base, dtype=float), (grids[0].size, 1))
    for column, grid in zip(form.free, grids, strict=True):
        out[:, column] = grid.ravel()
    return out


def pick_translation(
    prev_dir: FloatArray | None,
    form: TranslationForm,
    l_min: float,
    theta_max: float,
    target_dir: FloatArray | None = None,
) -> FloatArray:
    """
    Choose the translation vector of a given form.

    Among vectors of the form with ``|n| >= l_min`` whose direction is within
    ``theta_max`` of ``prev_dir`` (chord distance of unit vectors), the one
    whose direction is closest to ``target_dir`` (``prev_dir`` if omitted) is
    returned; ties go to the lexicographically smallest free entries. Free
    entries range over the nonzero integers of ``[-4 l_min, 4 l_min]``.

    Args:
        prev_dir: Direction of the previous translation, ``None`` for the first
        form: Translation form
        l_min: Minimal length
        theta_max: Maximal turn from ``prev_dir``
        target_dir: Preferred direction

    Returns:
        Translation vector in units of ``2 pi``

    Raises:
        ValueError: If a threshold is not positive or no direction is given
        InfeasibleTranslationError: If no vector satisfies the constraints
    """
    if l_min <= 0.0 or theta_max <= 0.0:
        msg = f"thresholds must be positive, got l_min={l_min}, theta_max={theta_max}"
        raise ValueError(msg)
    goal = target_dir if target_dir is not None else prev_dir
    if goal is None:
        msg = "a previous or target direction is needed"
        raise ValueError(msg)
    goal = _unit(np.asarray(goal, dtype=float))

    if not form.free:
        vectors = np.asarray(form.base, dtype=float)[None, :]
    else:
        vectors = _candidates(form, math.ceil(4.0 * l_min))
    lengths = np.linalg.norm(vectors, axis=1)
    dirs = vectors / lengths[:, None]
    feasible = lengths >= l_min
    if prev_dir is not None:
        prev = _unit(np.asarray(prev_dir, dtype=float))
        turns = np.linalg.norm(dirs - prev, axis=1)
        long_enough = feasible.copy()
        feasible &= turns <= theta_max
        if not np.any(feasible):
            best = float(turns[long_enough].min()) if np.any(long_enough) else math.inf
            msg = f"no translation of length >= {l_min} turns less than {theta_max}"
            raise InfeasibleTranslationError(msg, best)
    if not np.any(feasible):
        msg = f"no translation of the required form reaches length {l_min}"
        raise InfeasibleTranslationError(msg, math.inf)

    miss = np.linalg.norm(dirs - goal, axis=1)
    miss[~feasible] = np.inf
    ties = np.flatnonzero(miss <= miss.min() + _TIE_TOL)
    keys = [tuple(vectors[i, list(form.free)]) for i in ties]
    choice = ties[min(range(len(ties)), key=keys.__getitem__)]
    return vectors[choice].copy()


@dataclass(frozen=True)
class ItineraryParams:
    """Parameters of the itinerary compiler."""

    p: int
    eps: float
    r: int = 3
    n_per_string: int = 5
    l_min: float = 50.0
    theta_max: float = 0.6
    transfer_profile: TransferProfile = "turning"
    rho_v: float | None = None
    rho_h: float | None = None


@dataclass
class Itinerary:
    """Sections to visit and the translations between consecutive ones."""

    path: list[int]
    sections: list[Section] = field(default_factory=list)
    translations: list[FloatArray] = field(default_factory=list)
    string_boundaries: list[int] = field(default_factory=list)

    @property
    def directions(self) -> list[FloatArray]:
        """Unit directions of the translations."""
        return [t / np.linalg.norm(t) for t in self.translations]


def _string_target(roles: EdgeRoles, phi: float, l_min: float) -> FloatArray:
    """Direction sharing energy ``cos^2 : sin^2`` between donor and receiver."""
    target = np.zeros(roles.p)
    target[roles.facilitator] = 1.0
    target[roles.donor] = l_min * math.cos(phi)
    target[roles.receiver] = l_min * math.sin(phi)
    return _unit(target)


def _string_angles(n: int, profile: TransferProfile) -> list[float]:
    if profile == "uniform" or n == 1:
        return [math.pi / 4.0] * n
    return list(np.linspace(_TURN_LO, _TURN_HI, n))


def compile_itinerary(path: list[int], params: ItineraryParams) -> Itinerary:
    """
    Compile a unit-step path into an itinerary.

    Args:
        path: Positions ``sigma_0, sigma_1, ...`` on the site graph
        params: Compiler parameters

    Returns:
        The itinerary; empty for paths without steps

    Raises:
        ValueError: If the path has a non-unit step
        InfeasibleTranslationError: If a translation cannot be chosen; carries
            the translation index
    """
    itin = Itinerary(path=list(path))
    if len(path) < 2:
        return itin
    edges = [edge_roles(a, b, params.p) for a, b in zip(path, path[1:], strict=False)]
    radius = math.sqrt(params.eps)
    rho_v = params.rho_v if params.rho_v is not None else radius
    rho_h = params.rho_h if params.rho_h is not None else radius

    center = section_center(edges[0])
    itin.sections.append(Section(center, edges[0], rho_v, rho_h))
    prev_dir: FloatArray | None = None
    prev_roles = edges[0]

    def advance(roles: EdgeRoles, target: FloatArray) -> None:
        nonlocal center, prev_dir, prev_roles
        form = translation_form(prev_roles, roles)
        index = len(itin.translations)
        try:
            vector = pick_translation(
                prev_dir, form, params.l_min, params.theta_max, target
            )
        except InfeasibleTranslationError as e:
            e.index = index
            logger.exception(f"Translation {index} is infeasible")
            raise
        center = center + TWO_PI * vector
        itin.translations.append(vector)
        itin.sections.append(Section(center, roles, rho_v, rho_h))
        prev_dir = _unit(vector)
        prev_roles = roles

    for k, roles in enumerate(edges):
        angles = _string_angles(params.n_per_string, params.transfer_profile)
        if k > 0:
            itin.string_boundaries.append(len(itin.translations))
            advance(roles, _string_target(roles, angles[0], params.l_min))
        for phi in angles:
            advance(roles, _string_target(roles, phi, params.l_min))

    logger.info(
        f"Compiled {len(edges)} strings into {len(itin.sections)} sections "
        f"and {len(itin.translations)} translations"
    )
    return itin


def asymptotic_thresholds(eps: float, r: int) -> dict[str, float]:
    """
    Spacing and turning thresholds of the small-``eps`` regime.

    Args:
        eps: Coupling scale
        r: Smallness exponent of the coupling

    Returns:
        Minimal translation length, maximal turn and step-time scale
    """
    return {
        "l_min": eps ** (-2 * r - 4),
        "theta_max": eps ** (2 * r + 4),
        "step_time": eps ** (-4 * r - 8),
    }


class RuleCheck(BaseModel):
    """Outcome of one itinerary rule at one index."""

    rule: str
    index: int
    value: float
    limit: float
    passed: bool


class ItineraryReport(BaseModel):
    """Machine-readable itinerary validation."""

    checks: list[RuleCheck]

    @property
    def passed(self) -> bool:
        """Whether every rule holds."""
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> list[RuleCheck]:
        """Failed checks."""
        return [check for check in self.checks if not check.passed]


def _congruence_error(section: Section) -> float:
    offsets = np.array([ROLE_OFFSETS[role] for role in section.roles.roles])
    delta = np.mod(section.center - offsets + math.pi, TWO_PI) - math.pi
    return float(np.max(np.abs(delta)))


def _check(rule: str, index: int, value: float, limit: float, ok: bool) -> RuleCheck:
    return RuleCheck(rule=rule, index=index, value=value, limit=limit, passed=ok)


def _form_error(vector: FloatArray, form: TranslationForm) -> float:
    error = 0.0
    for site, (value, fixed) in enumerate(zip(vector, form.base, strict=True)):
        if site in form.free:
            if value == 0.0 or value != round(value):
                error = max(error, 1.0)
        else:
            error = max(error, abs(value - fixed))
    return error


def validate_itinerary(
    itin: Itinerary, l_min: float, theta_max: float
) -> ItineraryReport:
    """
    Check an itinerary against the section, form, spacing and turning rules.

    Args:
        itin: Itinerary to check
        l_min: Minimal translation length
        theta_max: Maximal turn between consecutive translations

    Returns:
        Report with one check per rule and index
    """
    checks: list[RuleCheck] = []
    for k, section in enumerate(itin.sections):
        error = _congruence_error(section)
        checks.append(_check("sections", k, error, 1e-9, error <= 1e-9))
    for k, vector in enumerate(itin.translations):
        before, after = itin.sections[k], itin.sections[k + 1]
        form = translation_form(before.roles, after.roles)
        error = _form_error(vector, form)
        moved = float(np.max(np.abs(after.center - before.center - TWO_PI * vector)))
        error = max(error, moved)
        checks.append(_check("form", k, error, 1e-9, error <= 1e-9))
        length = float(np.linalg.norm(vector))
        checks.append(_check("length", k, length, l_min, length >= l_min))
    dirs = itin.directions
    for k in range(1, len(dirs)):
        turn = float(np.linalg.norm(dirs[k] - dirs[k - 1]))
        checks.append(_check("turning", k, turn, theta_max, turn <= theta_max))
    report = ItineraryReport(checks=checks)
    logger.info(
        f"Itinerary validation: {len(report.failures)} of {len(checks)} checks failed"
    )
    return report
