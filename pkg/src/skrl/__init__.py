"""Exact and Monte Carlo checks of path-sum approximations in the SK model."""
__version__ = "0.1.0"
