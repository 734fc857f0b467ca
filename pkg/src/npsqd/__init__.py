"""Sampling-based ground-state energies with number-preserving circuits."""
