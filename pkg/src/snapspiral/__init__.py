"""Spiral-metabeam snapping structures: geometry generation, geometrically
nonlinear path tracing, snap analysis and a quasi-steady swimmer model."""

__version__ = "0.1.0"
