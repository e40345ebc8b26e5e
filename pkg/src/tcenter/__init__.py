"""Numerics for planar vector fields with a topological center."""

__version__ = "0.1.0"
