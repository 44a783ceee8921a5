"""Driven one-axis-twisting simulations for atoms in a cavity."""

__version__ = "0.1.0"
