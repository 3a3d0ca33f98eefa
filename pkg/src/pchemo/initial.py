"""Named families of initial densities, all projected to mean ``M``."""

from __future__ import annotations

import numpy as np

from .core import Grid1D, Params, project_initial_data
from .errors import ValidationError

KINDS = ("constant", "cosine", "bump", "step", "random", "steady")


def initial_data(desc: dict, params: Params, grid: Grid1D) -> np.ndarray:
    """Build ``u0`` from a short description such as ``{"kind": "cosine", "amplitude": 0.1, "mode": 2}``.

    ``cosine`` is ``1 + a cos(mode pi x / L)``; ``bump`` a Gaussian of width
    ``width`` at ``center`` on a floor of ``floor``; ``step`` puts ``1 + a``
    left of ``center`` and ``1 - a`` right of it; ``random`` draws cell
    values uniformly in ``[1 - a, 1 + a]`` from ``seed``; ``steady`` samples
    the ``n``-th nonconstant steady state.  The result is rescaled to mean M.
    """
    kind = desc.get("kind", "cosine")
    x = grid.centers / grid.length
    a = float(desc.get("amplitude", 0.1))
    if kind == "constant":
        u = np.ones(grid.n_cells)
    elif kind == "cosine":
        u = 1.0 + a * np.cos(int(desc.get("mode", 1)) * np.pi * x)
    elif kind == "bump":
        c, wdt, floor = float(desc.get("center", 0.3)), float(desc.get("width", 0.1)), float(desc.get("floor", 0.2))
        u = floor + np.exp(-0.5 * ((x - c) / wdt) ** 2)
    elif kind == "step":
        u = np.where(x < float(desc.get("center", 0.5)), 1.0 + a, 1.0 - a)
    elif kind == "random":
        rng = np.random.default_rng(int(desc.get("seed", 0)))
        u = 1.0 + a * rng.uniform(-1.0, 1.0, grid.n_cells)
    elif kind == "steady":
        from .atlas.steady import build_steady_state

        return project_initial_data(build_steady_state(int(desc.get("n", 1)), params, grid).u, params, grid)
    else:
        raise ValidationError(f"unknown initial kind {kind!r}; expected one of {KINDS}")
    if np.any(u < 0):
        raise ValidationError(f"initial data of kind {kind!r} is negative somewhere (amplitude {a})")
    return project_initial_data(u, params, grid)
