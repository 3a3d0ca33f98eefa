"""Neumann problems for the chemical concentration.

Both modes use the cell-centered three-point Laplacian with a mirrored
ghost cell at each wall, so the discrete operator is symmetric and the
boundary face gradients vanish identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .core import Grid1D, _frozen
from .errors import NotSolvable

MEAN_TOL = 1e-10


@dataclass(frozen=True)
class EllipticSolution:
    v: np.ndarray
    grad_faces: np.ndarray


def neumann_laplacian_bands(n: int, h: float) -> np.ndarray:
    """Banded storage of ``-D2`` (positive semidefinite) for ``solve_banded``."""
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0
    ab[1, :] = 2.0
    ab[2, :-1] = -1.0
    ab[1, 0] = ab[1, -1] = 1.0
    if n == 1:
        ab[1, 0] = 0.0
    return ab / (h * h)


def apply_neg_laplacian(v, grid: Grid1D) -> np.ndarray:
    """``-D2 v`` with ghost-cell Neumann closure."""
    v = np.asarray(v, dtype=float)
    g = np.concatenate(([v[0]], v, [v[-1]]))
    return -(g[2:] - 2.0 * g[1:-1] + g[:-2]) / grid.h**2


def face_gradients(v, grid: Grid1D) -> np.ndarray:
    """Gradient at all ``n_cells + 1`` faces; the two wall faces are exactly 0."""
    v = grid.check_field(v, "v")
    g = np.zeros(grid.n_cells + 1)
    g[1:-1] = np.diff(v) / grid.h
    return g


def solve_poisson_neumann(rhs, grid: Grid1D, mean_tol: float = MEAN_TOL, mean_scale: float = 0.0) -> EllipticSolution:
    """Solve ``-v'' = rhs``, ``v'(0) = v'(L) = 0``, ``mean(v) = 0``.

    ``rhs`` must have zero mean up to ``mean_tol * max(max|rhs|, mean_scale)``;
    the residual mean is projected out.  The null space is removed by pinning the first
    unknown and shifting the result to zero mean afterwards.
    """
    f = grid.check_field(rhs, "rhs")
    scale = float(np.max(np.abs(f))) if f.size else 0.0
    mean = float(np.mean(f))
    if abs(mean) > mean_tol * max(scale, mean_scale):
        raise NotSolvable(
            f"Neumann-Poisson right-hand side has mean {mean:.3e}, "
            f"exceeds tolerance {mean_tol * max(scale, mean_scale):.3e}"
        )
    f = f - mean
    n = grid.n_cells
    v = np.zeros(n)
    if n > 1 and scale > 0:
        # drop row 0 (implied by compatibility) and column 0 (v_0 = 0)
        ab = neumann_laplacian_bands(n, grid.h)[:, 1:].copy()
        v[1:] = solve_banded((1, 1), ab, f[1:])
        v -= v.mean()
        # second shift cleans the rounding of the first
        v -= v.mean()
    return EllipticSolution(_frozen(v), _frozen(face_gradients(v, grid)))


def solve_helmholtz_neumann(rhs, grid: Grid1D) -> EllipticSolution:
    """Solve ``-v'' + v = rhs`` with homogeneous Neumann conditions."""
    f = grid.check_field(rhs, "rhs")
    ab = neumann_laplacian_bands(grid.n_cells, grid.h)
    ab[1, :] += 1.0
    v = solve_banded((1, 1), ab, f)
    return EllipticSolution(_frozen(v), _frozen(face_gradients(v, grid)))


def solve_chemical(u, M: float, mode: str, grid: Grid1D) -> EllipticSolution:
    """Dispatch on the elliptic mode: ``u - M`` for Poisson, ``u`` for Helmholtz."""
    u = np.asarray(u, dtype=float)
    if mode == "poisson":
        # u - M inherits rounding of size eps * M, not eps * max|u - M|
        return solve_poisson_neumann(u - M, grid, mean_scale=M)
    if mode == "helmholtz":
        return solve_helmholtz_neumann(u, grid)
    raise ValueError(f"unknown elliptic mode {mode!r}")
