"""Directional-ODE update formulas for advection-diffusion problems."""

__version__ = "0.1.0"
