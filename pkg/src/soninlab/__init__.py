"""Numerics for Sonin-type envelope theorems, the GUE one-point density and Dyson Brownian motion."""

__version__ = "0.1.0"
