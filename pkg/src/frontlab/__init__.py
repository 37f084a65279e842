"""Numerical laboratory for pulsating fronts in spatially periodic bistable media."""

__version__ = "0.1.0"
