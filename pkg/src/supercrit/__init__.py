"""Numerical laboratory for the radial energy-supercritical nonlinear wave
equation ``u_tt - Δu ± |u|^p u = 0``."""

__version__ = "0.1.0"
