"""Chemotaxis with gradient-dependent sensitivity: simulator and steady-state atlas."""

__version__ = "0.1.0"
