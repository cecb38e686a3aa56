"""Spectral laboratory for two-dimensional Schroedinger operators with radial magnetic fields."""

__version__ = "0.1.0"
