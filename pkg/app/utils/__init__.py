"""Utility modules for the lattice diffusion toolkit."""
