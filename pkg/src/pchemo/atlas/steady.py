"""Nonconstant steady states on (0, 1) with ``n`` full oscillations.

An orbit of period ``T(k)`` started at the turning point ``(r0, 0)``
satisfies the Neumann conditions at ``x = 0`` and ``x = 1`` exactly when
``T(k) = 1/n``.  Since ``T -> 0`` as ``k -> 0`` and ``T -> inf`` as
``k -> inf`` for ``p in (1, 2)``, a log-spaced scan of ``k`` always
brackets a solution; bisection then pins ``k_n``.  Monotonicity of ``T`` is
not assumed, so every bracket found by the scan is counted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ..core import Grid1D, Params, flux_coefficient, project_initial_data
from ..elliptic import apply_neg_laplacian
from ..errors import BracketFail, NonAdmissible, NumericalFailure
from ..stepper import semidiscrete_rhs
from .hamiltonian import EnergyLevel, turning_points
from .period import ODE_RTOL, Orbit, hamiltonian_rhs, orbit_scales, period_integral, period_oracle

log = logging.getLogger(__name__)

K_MIN = 1e-12
K_MAX = 1e12
PER_DECADE = 4
# 1e-8 in T would leave beta(1) ~ n * 1e-8 * k^(-1/6) off zero after n periods
KN_RTOL = 1e-12
_T_RTOL = 1e-12


def require_steady_range(params: Params) -> None:
    if not 1.0 < params.p < 2.0:
        raise NonAdmissible(f"steady-state families require p in (1, 2), got p={params.p}")


@dataclass(frozen=True)
class PeriodTable:
    k: np.ndarray
    T: np.ndarray
    T_oracle: np.ndarray | None = None

    @property
    def rel_diff(self) -> np.ndarray | None:
        if self.T_oracle is None:
            return None
        return np.abs(self.T - self.T_oracle) / self.T


def period_table(params: Params, k_min=K_MIN, k_max=K_MAX, per_decade=PER_DECADE, oracle=False,
                 n_points: int | None = None) -> PeriodTable:
    """Sample ``T(k)`` on a log grid, ``per_decade`` points per decade unless ``n_points`` is given."""
    if not 0 < k_min < k_max:
        raise ValueError(f"need 0 < k_min < k_max, got {k_min}, {k_max}")
    if n_points is None:
        n_pts = max(2, int(round(per_decade * math.log10(k_max / k_min))) + 1)
    elif int(n_points) != n_points or n_points < 2:
        raise ValueError(f"n_points must be an integer >= 2, got {n_points}")
    else:
        n_pts = int(n_points)
    ks = np.logspace(math.log10(k_min), math.log10(k_max), n_pts)
    T = np.array([period_integral(turning_points(k, params), params, _T_RTOL) for k in ks])
    To = np.array([period_oracle(k, params) for k in ks]) if oracle else None
    return PeriodTable(ks, T, To)


@dataclass(frozen=True)
class KnSolution:
    n: int
    level: EnergyLevel
    period: float
    n_brackets: int
    iterations: int

    @property
    def k(self) -> float:
        return self.level.k


def find_kn(n: int, params: Params, *, table: PeriodTable | None = None, k_min=K_MIN, k_max=K_MAX,
            per_decade=PER_DECADE, rtol=KN_RTOL, max_iter=200) -> KnSolution:
    """Energy level with ``|T(k_n) - 1/n| <= rtol / n``, smallest-k bracket first."""
    require_steady_range(params)
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    target = 1.0 / n
    if table is None:
        table = period_table(params, k_min, k_max, per_decade)
    f = table.T - target
    hits = np.flatnonzero((f[:-1] <= 0) & (f[1:] >= 0) | (f[:-1] >= 0) & (f[1:] <= 0))
    if hits.size == 0:
        raise BracketFail(
            f"T(k) - 1/{n} keeps one sign on k in [{table.k[0]:.1e}, {table.k[-1]:.1e}] "
            f"(T ranges over [{table.T.min():.3e}, {table.T.max():.3e}])"
        )
    if hits.size > 1:
        log.info("n=%d: %d brackets found, using the smallest k", n, hits.size)
    i = int(hits[0])
    lo, hi = math.log(table.k[i]), math.log(table.k[i + 1])
    f_lo = f[i]
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        level = turning_points(math.exp(mid), params)
        T = period_integral(level, params, _T_RTOL)
        if abs(T - target) <= rtol * target or hi - lo <= 1e-15:
            return KnSolution(int(n), level, T, int(hits.size), it)
        if (T - target > 0) == (f_lo > 0):
            lo, f_lo = mid, T - target
        else:
            hi = mid
    raise BracketFail(f"bisection for n={n} did not converge in {max_iter} iterations")


@dataclass
class SteadyState:
    n: int
    k_n: float
    T_n: float
    level: EnergyLevel
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    beta: np.ndarray
    orbit: Orbit
    residuals: dict = field(default_factory=dict)
    n_brackets: int = 1

    @property
    def max_u(self) -> float:
        return float(np.max(self.u))


def _psi(y, p):
    # inverse of y -> chi-free flux law: |y|^((2-p)/(p-1)) y
    return np.sign(y) * np.abs(y) ** (1.0 / (p - 1.0))


def steady_residuals(u, v, w, params: Params, grid: Grid1D) -> dict:
    """Discrete residuals of the stationary problem on the sampled profiles.

    ``res_eq1``: ``-u_xx + (chi u |v_x|^(p-2) v_x)_x`` in divergence form with
    central face fluxes; ``res_eq1_flux`` is the face flux itself, i.e. the
    same equation integrated once against the zero-flux wall.
    ``res_eq2``: ``-v_xx - (u - M)``.  ``res_plap``: the scalar form
    ``-(|z_x|^((2-p)/(p-1)) z_x)_x - M (e^(chi z) - 1)`` with ``z = w / chi``.
    Each is reported in the max norm and (``*_l2``) the h-weighted 2-norm.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    h, M, chi, p = grid.h, params.M, params.chi, params.p
    exact = Params(chi, p, M, params.length, params.elliptic_mode, 0.0)

    r2 = apply_neg_laplacian(v, grid) - (u - M)

    J = np.zeros(u.size + 1)
    J[1:-1] = np.diff(u) / h - 0.5 * (u[1:] + u[:-1]) * flux_coefficient(np.diff(v) / h, exact)
    r1 = -np.diff(J) / h

    z = w / chi
    G = np.zeros(u.size + 1)
    G[1:-1] = _psi(np.diff(z) / h, p)
    r3 = -np.diff(G) / h - M * np.expm1(chi * z)

    def l2(r):
        return float(math.sqrt(h * float(np.sum(r * r))))

    return {
        "res_eq1": float(np.max(np.abs(r1))),
        "res_eq2": float(np.max(np.abs(r2))),
        "res_plap": float(np.max(np.abs(r3))),
        "res_eq1_flux": float(np.max(np.abs(J))),
        "res_eq1_l2": l2(r1),
        "res_eq2_l2": l2(r2),
        "res_plap_l2": l2(r3),
    }


def build_steady_state(n: int, params: Params, grid: Grid1D, *, kn: KnSolution | None = None,
                       table: PeriodTable | None = None, rtol=ODE_RTOL) -> SteadyState:
    """Integrate ``n`` full periods from ``(r0, 0)`` and sample ``u = M e^w``, ``v``."""
    require_steady_range(params)
    if abs(grid.length - 1.0) > 1e-12 or abs(params.length - 1.0) > 1e-12:
        raise NonAdmissible("steady states are constructed on the unit interval (length = 1)")
    if kn is None:
        kn = find_kn(n, params, table=table)
    level = kn.level
    wscale, bscale = orbit_scales(level, params)
    atol = np.array([1e-15 * wscale, 1e-15 * bscale, 1e-16 * bscale])
    sol = solve_ivp(hamiltonian_rhs(params, with_potential=True), (0.0, 1.0), [level.r0, 0.0, 0.0],
                    method="DOP853", rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise NumericalFailure(f"orbit integration failed for n={n}: {sol.message}")

    x = grid.centers
    w, beta, V = sol.sol(x)
    u = params.M * np.exp(w)
    v = V - V.mean()
    orbit = Orbit(sol.t, sol.y[0], sol.y[1], level.k, kn.period)

    res = steady_residuals(u, v, w, params, grid)
    # the dynamics see u only after projection onto mean M
    res["res_dyn"] = float(np.max(np.abs(semidiscrete_rhs(project_initial_data(u, params, grid), params, grid))))
    res["mass_error"] = float(abs(np.mean(u) - params.M) / params.M)
    res["endpoint_beta"] = float(abs(sol.y[1, -1]) / np.max(np.abs(sol.y[1])))
    res["endpoint_w"] = float(abs(sol.y[0, -1] - level.r0) / level.r0)
    res["energy_dev"] = orbit.energy_deviation(params)
    return SteadyState(int(n), level.k, kn.period, level, x, u, v, w, beta, orbit, res, kn.n_brackets)


@dataclass
class AtlasResult:
    states: list
    failures: dict
    table: PeriodTable


def atlas(params: Params, n_max: int, grid: Grid1D, *, k_min=K_MIN, k_max=K_MAX, per_decade=PER_DECADE) -> AtlasResult:
    """Steady states for ``n = 1 .. n_max``; a failure for one ``n`` does not stop the others."""
    require_steady_range(params)
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be a positive integer, got {n_max}")
    table = period_table(params, k_min, k_max, per_decade)
    states, failures = [], {}
    for n in range(1, int(n_max) + 1):
        try:
            kn = find_kn(n, params, table=table)
            states.append(build_steady_state(n, params, grid, kn=kn))
        except NumericalFailure as exc:
            log.warning("n=%d failed: %s", n, exc)
            failures[n] = f"{type(exc).__name__}: {exc}"
    return AtlasResult(states, failures, table)
