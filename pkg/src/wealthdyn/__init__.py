"""Wealth-distribution dynamics: simulation, estimation, and tax analysis."""

__version__ = "0.1.0"
