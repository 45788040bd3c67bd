"""Numerical toolkit for p-convex sets, p-gauges and fixed-point schemes."""

__version__ = "0.1.0"
