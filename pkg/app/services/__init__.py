"""Numerical services of the lattice diffusion toolkit."""
