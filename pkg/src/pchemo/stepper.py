"""Mass-conservative finite-volume time stepping for the coupled system.

One step solves ``(I - dt D2) u_new = u - dt div F(u, v)`` where ``F`` is
the explicit chemotactic face flux computed from the beginning-of-step
``v``, and then refreshes ``v`` from ``u_new``.  Both the diffusion
operator and ``div F`` are in conservation form with zero wall flux, so
``sum(u) * h`` is preserved up to rounding.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .core import Grid1D, Params, State, flux_coefficient
from .diagnostics import lq_norm, total_mass
from .elliptic import neumann_laplacian_bands, solve_chemical
from .errors import BlowupSuspected, NegativeDensity

log = logging.getLogger(__name__)

SPEED_FLOOR = 1e-14
NEG_TOL = 1e-12
SCHEMES = ("upwind", "central")


@dataclass(frozen=True)
class StepperConfig:
    t_end: float
    dt: float | str = "auto"
    cfl_safety: float = 0.5
    output_every: int = 1
    nonneg_clip: bool = False
    dt_max: float = 1e-3
    blowup_factor: float = 1e6
    scheme: str = "upwind"
    norms_q: tuple = (2.0,)

    def __post_init__(self):
        if isinstance(self.dt, str):
            if self.dt != "auto":
                raise ValueError(f"dt must be a positive number or 'auto', got {self.dt!r}")
        elif not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if int(self.output_every) != self.output_every or self.output_every < 1:
            raise ValueError(f"output_every must be a positive integer, got {self.output_every}")
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        object.__setattr__(self, "norms_q", tuple(float(q) for q in self.norms_q))


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    n_steps: int = 0
    blowup: bool = False

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def column(self, name: str) -> np.ndarray:
        return np.array([d[name] for d in self.diagnostics])


def initial_state(u0, params: Params, grid: Grid1D, t: float = 0.0) -> State:
    sol = solve_chemical(u0, params.M, params.elliptic_mode, grid)
    return State(u0, sol.v, t, sol.grad_faces)


def _grad(state: State, grid: Grid1D) -> np.ndarray:
    if state.grad_faces is not None:
        return state.grad_faces
    g = np.zeros(grid.n_cells + 1)
    g[1:-1] = np.diff(state.v) / grid.h
    return g


def advective_face_flux(u, grad_faces, params: Params, scheme: str = "upwind") -> np.ndarray:
    """Chemotactic flux ``a u`` at every face, ``a = chi phi(v_x)``.

    The donor cell is chosen by the sign of ``a``; both wall faces carry
    zero flux regardless of the gradient passed in.
    """
    u = np.asarray(u, dtype=float)
    a = np.asarray(flux_coefficient(np.asarray(grad_faces)[1:-1], params))
    F = np.zeros(u.size + 1)
    if scheme == "upwind":
        F[1:-1] = np.where(a > 0, a * u[:-1], a * u[1:])
    elif scheme == "central":
        F[1:-1] = 0.5 * a * (u[:-1] + u[1:])
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return F


def semidiscrete_rhs(u, params: Params, grid: Grid1D, scheme: str = "upwind") -> np.ndarray:
    """``D2 u - div F`` with ``v`` solved from ``u``: the method-of-lines right-hand side."""
    u = grid.check_field(u, "u")
    sol = solve_chemical(u, params.M, params.elliptic_mode, grid)
    F = advective_face_flux(u, sol.grad_faces, params, scheme)
    g = np.concatenate(([u[0]], u, [u[-1]]))
    return (g[2:] - 2.0 * g[1:-1] + g[:-2]) / grid.h**2 - np.diff(F) / grid.h


def suggest_dt(state: State, params: Params, grid: Grid1D, cfl_safety: float = 0.5, dt_max: float = 1e-3) -> float:
    """Advective CFL step ``cfl_safety * h / max|a|``; diffusion is implicit."""
    a = np.asarray(flux_coefficient(_grad(state, grid), params))
    speed = max(float(np.max(np.abs(a))) if a.size else 0.0, SPEED_FLOOR)
    return min(cfl_safety * grid.h / speed, dt_max)


def _diffusion_bands(grid: Grid1D, dt: float) -> np.ndarray:
    ab = dt * neumann_laplacian_bands(grid.n_cells, grid.h)
    ab[1, :] += 1.0
    return ab


def step(
    state: State,
    dt: float,
    params: Params,
    grid: Grid1D,
    *,
    nonneg_clip: bool = False,
    scheme: str = "upwind",
    _bands: np.ndarray | None = None,
) -> State:
    u = grid.check_field(state.u, "u")
    F = advective_face_flux(u, _grad(state, grid), params, scheme)
    g = np.concatenate(([u[0]], u, [u[-1]]))
    # increment form of (I - dt D2) u_new = u - dt div F; keeps rounding in
    # the mass proportional to the update rather than to u itself
    rhs = dt * ((g[2:] - 2.0 * g[1:-1] + g[:-2]) / grid.h**2 - np.diff(F) / grid.h)
    ab = _bands if _bands is not None else _diffusion_bands(grid, dt)
    u_new = u + solve_banded((1, 1), ab, rhs)

    umin = float(u_new.min())
    tol = NEG_TOL * float(np.max(np.abs(u)))
    if umin < -tol:
        if not nonneg_clip:
            raise NegativeDensity(f"min(u) = {umin:.3e} at t = {state.t + dt:.6g} (tolerance {tol:.1e})")
        # rescale after clipping so the step still conserves mass
        clipped = np.maximum(u_new, 0.0)
        u_new = clipped * (math.fsum(u_new) / math.fsum(clipped))

    sol = solve_chemical(u_new, params.M, params.elliptic_mode, grid)
    return State(u_new, sol.v, state.t + dt, sol.grad_faces)


def record(state: State, params: Params, grid: Grid1D, norms_q=(2.0,)) -> dict:
    rec = {
        "t": float(state.t),
        "mass": total_mass(state.u, grid),
        "sup_u": float(np.max(np.abs(state.u))),
        "sup_gradv": float(np.max(np.abs(_grad(state, grid)))),
        "min_u": float(np.min(state.u)),
        "mean_v": float(np.mean(state.v)),
        "sup_v": float(np.max(np.abs(state.v))),
    }
    for q in norms_q:
        rec[f"l{q:g}_u"] = lq_norm(state.u, q, grid)
    return rec


def simulate(u0, config: StepperConfig, params: Params, grid: Grid1D, *, raise_on_blowup: bool = False) -> Trajectory:
    """Integrate from ``u0`` (nonnegative, mean ``M``) up to ``config.t_end``.

    Diagnostics are recorded at t = 0, every ``output_every`` steps and at
    the final time.  When ``max|u|`` exceeds ``blowup_factor * M`` the run
    stops early with ``trajectory.blowup`` set.
    """
    ceiling = config.blowup_factor * params.M
    state = initial_state(grid.check_field(u0, "u0"), params, grid)
    traj = Trajectory()
    norms_q = tuple(dict.fromkeys((2.0,) + config.norms_q))

    def keep(s):
        traj.snapshots.append(s)
        traj.diagnostics.append(record(s, params, grid, norms_q))

    keep(state)
    fixed_bands = None
    if config.dt != "auto":
        fixed_bands = _diffusion_bands(grid, float(config.dt))
    # relative slack so rounding in t does not create a sliver step
    t_stop = config.t_end * (1 - 1e-12)
    n = 0
    while state.t < t_stop:
        if config.dt == "auto":
            dt = suggest_dt(state, params, grid, config.cfl_safety, config.dt_max)
            bands = None
        else:
            dt = float(config.dt)
            bands = fixed_bands
        if state.t + dt >= t_stop:
            dt = config.t_end - state.t
            bands = None
        state = step(state, dt, params, grid, nonneg_clip=config.nonneg_clip, scheme=config.scheme, _bands=bands)
        n += 1
        sup = float(np.max(state.u))
        if not np.isfinite(sup) or sup > ceiling:
            keep(state)
            traj.n_steps = n
            traj.blowup = True
            log.warning("blow-up suspected at t=%.6g: max u = %.3e > %.3e", state.t, sup, ceiling)
            if raise_on_blowup:
                raise BlowupSuspected(f"max u = {sup:.3e} exceeds ceiling {ceiling:.3e} at t = {state.t:.6g}", traj)
            return traj
        if n % config.output_every == 0 or state.t >= t_stop:
            keep(state)
    if traj.snapshots[-1] is not state:
        keep(state)
    traj.n_steps = n
    return traj
