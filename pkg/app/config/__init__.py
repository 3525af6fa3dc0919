"""Configuration module for the lattice diffusion toolkit."""
