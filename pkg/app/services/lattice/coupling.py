"""
Bump coupling of neighbouring triples.

Each site ``i`` owns the triple ``(x[i-1], x[i], x[i+1])`` (indices mod ``p``)
and contributes ``eps * beta(triple)`` to the energy, with

    beta(x) = eps^r * sum_n eta(|x - 2 pi n| / eps).

Since ``eps < pi``, only the nearest lattice point ``2 pi n*`` can contribute,
so the sum reduces to one term.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

TWO_PI = 2.0 * math.pi

FloatArray = NDArray[np.float64]


def _exp_eta(u: FloatArray) -> FloatArray:
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def _exp_eta_deriv(u: FloatArray) -> FloatArray:
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = _exp_eta(ui) * (-2.0 * ui / (1.0 - ui**2) ** 2)
    return out


def _flat_eta(u: FloatArray) -> FloatArray:
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 4))
    return out


def _flat_eta_deriv(u: FloatArray) -> FloatArray:
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = _flat_eta(ui) * (-4.0 * ui**3 / (1.0 - ui**4) ** 2)
    return out


@dataclass(frozen=True)
class BumpProfile:
    """
    Smooth bump ``eta`` supported on ``|u| < 1`` with ``eta(0) = 1``.

    Both registered profiles decrease in ``|u|``, so the infimum over a ball is
    attained on its boundary.
    """

    name: str
    func: Callable[[FloatArray], FloatArray] = field(repr=False)
    deriv: Callable[[FloatArray], FloatArray] = field(repr=False)
    max_value: float = 1.0

    def __call__(self, u: float) -> float:
        """Evaluate the bump at a scalar."""
        return float(self.func(np.array([u], dtype=float))[0])

    def inf_on_ball(self, radius: float = 0.5) -> float:
        """
        Infimum of the bump over ``|u| <= radius``.

        Args:
            radius: Ball radius in units of ``eps``

        Returns:
            ``eta(radius)``
        """
        return self(radius)


BUMP_PROFILES: dict[str, BumpProfile] = {
    "exp": BumpProfile("exp", _exp_eta, _exp_eta_deriv),
    "flat": BumpProfile("flat", _flat_eta, _flat_eta_deriv),
}


def bump_eta(u: float, profile: str = "exp") -> float:
    """
    Evaluate a registered bump profile.

    Args:
        u: Scaled distance
        profile: Profile name

    Returns:
        ``eta(u)``
    """
    return BUMP_PROFILES[profile](u)


@dataclass(frozen=True)
class LensMask:
    """Removes the lens of triple ``site`` around the lattice point ``2 pi n``."""

    site: int
    lattice_point: tuple[int, int, int]


@dataclass(frozen=True)
class CouplingParams:
    """Coupling scale, smallness exponent, bump profile and removed lenses."""

    eps: float
    r: int = 3
    profile: str = "exp"
    masks: tuple[LensMask, ...] = ()

    def __post_init__(self) -> None:
        """Validate the parameters."""
        if not 0.0 < self.eps < math.pi:
            msg = f"eps must lie in (0, pi), got {self.eps!r}"
            raise ValueError(msg)
        if self.r < 3:
            msg = f"r must be an integer >= 3, got {self.r!r}"
            raise ValueError(msg)
        if self.profile not in BUMP_PROFILES:
            msg = f"unknown bump profile {self.profile!r}"
            raise ValueError(msg)

    @property
    def bump(self) -> BumpProfile:
        """The bump profile."""
        return BUMP_PROFILES[self.profile]

    @property
    def amplitude(self) -> float:
        """Peak value ``eps^r * max eta`` of ``beta``."""
        return self.eps**self.r * self.bump.max_value

    def with_masks(self, masks: tuple[LensMask, ...]) -> "CouplingParams":
        """Return a copy with the given lenses removed."""
        return CouplingParams(self.eps, self.r, self.profile, masks)


def triples(x: FloatArray) -> FloatArray:
    """
    Stack the neighbour triples of a periodic lattice.

    Args:
        x: Site angles, shape ``(p,)``

    Returns:
        Array of shape ``(p, 3)``; row ``i`` is ``(x[i-1], x[i], x[i+1])``
    """
    return np.stack([np.roll(x, 1), x, np.roll(x, -1)], axis=1)


def _reduce(tri: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Nearest lattice points, offsets and their norms."""
    n = np.rint(tri / TWO_PI)
    offset = tri - TWO_PI * n
    return n, offset, np.linalg.norm(offset, axis=-1)


def _active(n: FloatArray, dist: FloatArray, cp: CouplingParams) -> NDArray[np.bool_]:
    inside = dist < cp.eps
    for mask in cp.masks:
        point = tuple(int(k) for k in n[mask.site])
        if inside[mask.site] and point == mask.lattice_point:
            inside[mask.site] = False
    return inside


def lattice_beta(x: FloatArray, cp: CouplingParams | None) -> FloatArray:
    """
    Coupling value of every triple of the lattice.

    Args:
        x: Site angles, shape ``(p,)``
        cp: Coupling parameters, ``None`` for the uncoupled lattice

    Returns:
        ``beta`` per triple, shape ``(p,)``
    """
    x = np.asarray(x, dtype=float)
    if cp is None:
        return np.zeros_like(x)
    n, _, dist = _reduce(triples(x))
    values = cp.eps**cp.r * cp.bump.func(dist / cp.eps)
    values[~_active(n, dist, cp)] = 0.0
    return values


def lattice_beta_grad(x: FloatArray, cp: CouplingParams | None) -> FloatArray:
    """
    Gradient of each triple's coupling with respect to its three arguments.

    Args:
        x: Site angles, shape ``(p,)``
        cp: Coupling parameters, ``None`` for the uncoupled lattice

    Returns:
        Array ``G`` of shape ``(p, 3)`` with ``G[i, k]`` the derivative of
        ``beta`` of triple ``i`` by its ``k``-th argument
    """
    x = np.asarray(x, dtype=float)
    if cp is None:
        return np.zeros((x.size, 3))
    n, offset, dist = _reduce(triples(x))
    active = _active(n, dist, cp) & (dist > 0.0)
    grad = np.zeros_like(offset)
    if np.any(active):
        d = dist[active]
        slope = cp.eps ** (cp.r - 1) * cp.bump.deriv(d / cp.eps)
        grad[active] = (slope / d)[:, None] * offset[active]
    return grad


def coupling_beta(triple: FloatArray, cp: CouplingParams) -> float:
    """
    Coupling ``beta`` of one triple.

    Args:
        triple: Three angles
        cp: Coupling parameters

    Returns:
        ``eps^r * eta(|x - 2 pi n*| / eps)``
    """
    tri = np.asarray(triple, dtype=float).reshape(1, 3)
    _, _, dist = _reduce(tri)
    return float(cp.eps**cp.r * cp.bump.func(dist / cp.eps)[0])


def coupling_beta_grad(triple: FloatArray, cp: CouplingParams) -> FloatArray:
    """
    Analytic gradient of ``beta`` of one triple.

    Args:
        triple: Three angles
        cp: Coupling parameters

    Returns:
        Gradient, shape ``(3,)``
    """
    tri = np.asarray(triple, dtype=float).reshape(1, 3)
    _, offset, dist = _reduce(tri)
    if not 0.0 < dist[0] < cp.eps:
        return np.zeros(3)
    slope = cp.eps ** (cp.r - 1) * cp.bump.deriv(dist / cp.eps)[0]
    return np.asarray(slope / dist[0] * offset[0], dtype=float)


def lens_distance(x: FloatArray, eps: float) -> float:
    """
    Margin of the closest triple to entering a lens.

    Args:
        x: Site angles, shape ``(p,)``
        eps: Lens radius

    Returns:
        ``min_i |triple_i - 2 pi n*| - eps``; negative inside a lens
    """
    _, _, dist = _reduce(triples(np.asarray(x, dtype=float)))
    return float(dist.min() - eps)
