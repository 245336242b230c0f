"""Blockade-constrained spin relaxation: configuration graphs, quantum dynamics and kinetic equations."""

__version__ = "1.0.0"
