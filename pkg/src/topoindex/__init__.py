"""Topological invariants of disordered covariant tight-binding models."""

__version__ = "0.1.0"
