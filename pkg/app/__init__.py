"""Lattice Diffusion - broken geodesics and diffusing orbits for coupled pendula."""

__version__ = "0.1.0"
