"""Grid norms and conserved quantities."""

from __future__ import annotations

import math

import numpy as np

from .core import Grid1D


def total_mass(u, grid: Grid1D) -> float:
    """Midpoint-rule mass ``h * sum(u)``."""
    return grid.h * math.fsum(np.asarray(u, dtype=float))


def lq_norm(u, q, grid: Grid1D) -> float:
    """Discrete ``L^q`` norm ``(h sum |u|^q)^(1/q)``; ``q = inf`` gives ``max|u|``."""
    q = float(q)
    if q < 1:
        raise ValueError(f"q must be in [1, inf], got {q}")
    a = np.abs(np.asarray(u, dtype=float))
    if math.isinf(q):
        return float(a.max())
    return float((grid.h * np.sum(a**q)) ** (1.0 / q))


def relative_drift(values) -> float:
    """``max |x_i - x_0| / |x_0|`` over a sequence."""
    x = np.asarray(values, dtype=float)
    return float(np.max(np.abs(x - x[0])) / abs(x[0]))
