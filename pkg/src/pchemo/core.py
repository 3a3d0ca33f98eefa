"""Model parameters, the 1-D cell-centered mesh, and the chemotactic flux law.

Fields are plain ``numpy`` arrays with one value per cell.  Helper
constructors return read-only copies so that values shared between
snapshots cannot be mutated behind a caller's back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonAdmissible, ZeroData

ELLIPTIC_MODES = ("poisson", "helmholtz")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Params:
    """Physical constants of ``u_t - u_xx = -(chi u |v_x|^(p-2) v_x)_x``.

    ``M`` is the mean mass of ``u``; ``eps_reg`` regularizes the flux law
    near ``v_x = 0`` and defaults to the unregularized model.
    """

    chi: float
    p: float
    M: float
    length: float = 1.0
    elliptic_mode: str = "poisson"
    eps_reg: float = 0.0

    def __post_init__(self):
        checks = [
            (self.p > 1, f"p must satisfy p > 1 (admissible range p in (1, inf) for N = 1), got p={self.p}"),
            (self.chi > 0, f"chi must be positive, got chi={self.chi}"),
            (self.M > 0, f"M must be positive, got M={self.M}"),
            (self.length > 0, f"length must be positive, got length={self.length}"),
            (self.eps_reg >= 0, f"eps_reg must be nonnegative, got eps_reg={self.eps_reg}"),
        ]
        for ok, msg in checks:
            # NaN fails every comparison and lands here too
            if not ok:
                raise NonAdmissible(msg)
        if not all(math.isfinite(x) for x in (self.chi, self.p, self.M, self.length, self.eps_reg)):
            raise NonAdmissible("parameters must be finite")
        if self.elliptic_mode not in ELLIPTIC_MODES:
            raise NonAdmissible(f"elliptic_mode must be one of {ELLIPTIC_MODES}, got {self.elliptic_mode!r}")


def make_params(chi, p, M, length=1.0, elliptic_mode="poisson", eps_reg=0.0) -> Params:
    try:
        return Params(float(chi), float(p), float(M), float(length), str(elliptic_mode), float(eps_reg))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, NonAdmissible):
            raise
        raise NonAdmissible(f"non-numeric parameter: {exc}") from exc


def admissible(p: float, dim: int = 1) -> bool:
    """Whether exponent ``p`` is in the admissible range for dimension ``dim``."""
    if dim == 1:
        return p > 1
    return 1 < p < dim / (dim - 1)


@dataclass(frozen=True)
class Grid1D:
    n_cells: int
    length: float = 1.0

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise NonAdmissible(f"n_cells must be a positive integer, got {self.n_cells}")
        if not self.length > 0:
            raise NonAdmissible(f"length must be positive, got {self.length}")

    @property
    def h(self) -> float:
        return self.length / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    @property
    def faces(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.h

    def check_field(self, values, name="field") -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.n_cells,):
            raise ValueError(f"{name} has shape {arr.shape}, expected ({self.n_cells},)")
        return arr


@dataclass(frozen=True)
class State:
    """Snapshot ``(u, v, t)`` of the coupled system."""

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0
    grad_faces: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u))
        object.__setattr__(self, "v", _frozen(self.v))
        if self.grad_faces is not None:
            object.__setattr__(self, "grad_faces", _frozen(self.grad_faces))
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must live on the same grid")
        if self.t < 0:
            raise ValueError(f"time must be nonnegative, got {self.t}")


def flux_coefficient(beta, params: Params):
    """Chemotactic drift speed ``chi * phi_eps(beta)``.

    With ``eps_reg = 0`` this is ``chi |beta|^(p-2) beta`` written as
    ``chi sign(beta) |beta|^(p-1)``, which is continuous at 0 for p > 1.
    Otherwise ``phi_eps(beta) = (beta^2 + eps^2)^((p-2)/2) beta``.
    """
    b = np.asarray(beta, dtype=float)
    if params.eps_reg == 0.0:
        out = params.chi * np.sign(b) * np.abs(b) ** (params.p - 1.0)
    else:
        out = params.chi * (b * b + params.eps_reg**2) ** (0.5 * (params.p - 2.0)) * b
    return out if out.ndim else float(out)


def project_initial_data(u0, params: Params, grid: Grid1D) -> np.ndarray:
    """Rescale nonnegative ``u0`` multiplicatively so that its cell mean is ``M``."""
    u0 = grid.check_field(u0, "u0")
    if np.any(u0 < 0):
        raise ValueError("initial data must be nonnegative")
    mean = float(np.mean(u0))
    if mean == 0.0:
        raise ZeroData("initial data has zero mean")
    if mean == params.M:
        return _frozen(u0)
    out = u0 * (params.M / mean)
    # one correction pass removes the rounding left by the division
    out = out * (params.M / np.mean(out))
    return _frozen(out)
