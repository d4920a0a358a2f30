"""Numerical toolkit for the fractional critical problem on slit annuli."""

from .fraccore import (
    FracParams,
    bootstrap_exponents,
    critical_exponent,
    kernel_constant,
    minimal_energy,
    sharp_sobolev_constant,
)

__all__ = [
    "FracParams",
    "bootstrap_exponents",
    "critical_exponent",
    "kernel_constant",
    "minimal_energy",
    "sharp_sobolev_constant",
]

__version__ = "0.1.0"
