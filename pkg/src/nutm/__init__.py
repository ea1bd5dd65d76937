"""Numerical unified transform method for the nonlinear Schroedinger equation on the half-line."""

__version__ = "0.1.0"
