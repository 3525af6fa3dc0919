"""Coupled pendulum lattice: bump coupling, energies and flows."""

from app.services.lattice.coupling import (
    BUMP_PROFILES,
    BumpProfile,
    CouplingParams,
    LensMask,
    bump_eta,
    coupling_beta,
    coupling_beta_grad,
    lattice_beta,
    lattice_beta_grad,
    lens_distance,
    triples,
)
from app.services.lattice.integrators import (
    Trajectory,
    lattice_flow,
    lens_max_step,
    symplectic_flow,
)
from app.services.lattice.system import (
    LatticeState,
    hamiltonian,
    lattice_forces,
    lattice_rhs,
    potential_energy,
    site_energies,
    site_energy,
)

__all__ = [
    "BUMP_PROFILES",
    "BumpProfile",
    "CouplingParams",
    "LatticeState",
    "LensMask",
    "Trajectory",
    "bump_eta",
    "coupling_beta",
    "coupling_beta_grad",
    "hamiltonian",
    "lattice_beta",
    "lattice_beta_grad",
    "lattice_flow",
    "lattice_forces",
    "lattice_rhs",
    "lens_distance",
    "lens_max_step",
    "potential_energy",
    "site_energies",
    "site_energy",
    "symplectic_flow",
    "triples",
]
