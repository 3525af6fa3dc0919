"""
Tests for the lattice diffusion toolkit.
"""
