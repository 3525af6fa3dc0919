"""Lattice state, Hamiltonian, site energies and equations of motion."""

from dataclasses import dataclass

import numpy as np

from app.services.lattice.coupling import (
    CouplingParams,
    FloatArray,
    lattice_beta,
    lattice_beta_grad,
)

MIN_SITES = 4


@dataclass(frozen=True, eq=False)
class LatticeState:
    """Angles (unreduced lifts) and velocities of ``p`` pendula on a ring."""

    x: FloatArray
    y: FloatArray

    def __post_init__(self) -> None:
        """Validate and freeze the arrays."""
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            msg = f"x and y must be 1-D of equal length, got {x.shape} and {y.shape}"
            raise ValueError(msg)
        if x.size < MIN_SITES:
            msg = f"a lattice needs at least {MIN_SITES} sites, got {x.size}"
            raise ValueError(msg)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            msg = "lattice state has non-finite components"
            raise ValueError(msg)
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def p(self) -> int:
        """Number of sites."""
        return int(self.x.size)

    def to_vector(self) -> FloatArray:
        """Concatenate ``(x, y)`` into one phase-space vector."""
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_vector(cls, z: FloatArray) -> "LatticeState":
        """Split a phase-space vector into angles and velocities."""
        z = np.asarray(z, dtype=float)
        half = z.size // 2
        return cls(z[:half], z[half:])


def site_potentials(x: FloatArray) -> FloatArray:
    """Pendulum potential ``-2 cos^2(x/2)`` of every site."""
    return -2.0 * np.cos(0.5 * np.asarray(x, dtype=float)) ** 2


def potential_energy(x: FloatArray, cp: CouplingParams | None) -> float:
    """
    Total potential ``U = sum V(x_i) + eps * sum beta(triple_i)``.

    Args:
        x: Site angles
        cp: Coupling parameters, ``None`` for the uncoupled lattice

    Returns:
        Potential energy
    """
    total = float(site_potentials(x).sum())
    if cp is not None:
        total += cp.eps * float(lattice_beta(x, cp).sum())
    return total


def hamiltonian(state: LatticeState, cp: CouplingParams | None) -> float:
    """
    Total energy of the lattice.

    Args:
        state: Lattice state
        cp: Coupling parameters, ``None`` for the uncoupled lattice

    Returns:
        ``sum y^2/2 + U(x)``
    """
    return 0.5 * float(np.dot(state.y, state.y)) + potential_energy(state.x, cp)


def site_energies(state: LatticeState) -> FloatArray:
    """Per-site energies ``y_j^2/2 + V(x_j)``, coupling excluded."""
    return 0.5 * state.y**2 + site_potentials(state.x)


def site_energy(state: LatticeState, j: int) -> float:
    """
    Energy of one site, coupling excluded.

    Args:
        state: Lattice state
        j: Site index in ``[0, p)``

    Returns:
        ``y_j^2/2 + V(x_j)``

    Raises:
        IndexError: If ``j`` is out of range
    """
    if not 0 <= j < state.p:
        msg = f"site {j} out of range for p={state.p}"
        raise IndexError(msg)
    return float(site_energies(state)[j])


def lattice_forces(x: FloatArray, cp: CouplingParams | None) -> FloatArray:
    """
    Generalized forces ``-dU/dx``.

    Site ``j`` appears as the right argument of triple ``j-1``, the middle
    argument of triple ``j`` and the left argument of triple ``j+1``.

    Args:
        x: Site angles
        cp: Coupling parameters, ``None`` for the uncoupled lattice

    Returns:
        Force on every site
    """
    x = np.asarray(x, dtype=float)
    force = -np.sin(x)
    if cp is not None:
        grad = lattice_beta_grad(x, cp)
        coupling = np.roll(grad[:, 0], -1) + grad[:, 1] + np.roll(grad[:, 2], 1)
        force -= cp.eps * coupling
    return force


def lattice_rhs(state: LatticeState, cp: CouplingParams | None) -> LatticeState:
    """
    Time derivative of a lattice state.

    Args:
        state: Lattice state
        cp: Coupling parameters, ``None`` for the uncoupled lattice

    Returns:
        ``(x', y') = (y, -dU/dx)`` packed as a state
    """
    return LatticeState(state.y.copy(), lattice_forces(state.x, cp))


def rhs_vector(_: float, z: FloatArray, cp: CouplingParams | None) -> FloatArray:
    """Phase-space right-hand side in the ``solve_ivp`` calling convention."""
    half = z.size // 2
    return np.concatenate([z[half:], lattice_forces(z[:half], cp)])
