"""Simulation and classification of passive nonlinear RF tags by spectral fingerprint."""

__version__ = "0.1.0"
