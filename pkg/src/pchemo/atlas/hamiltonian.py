"""Phase-plane energy of the steady-state system in ``(w, beta)`` variables.

With ``w = ln(u/M)`` and ``beta = v_x`` the stationary problem becomes

    w_x = chi |beta|^(p-2) beta,     beta_x = M (1 - e^w),

which conserves ``H(w, beta) = M (e^w - w - 1) + chi |beta|^p / p``.
Orbits are the level sets ``H = chi k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Params

_SERIES_CUT = 0.05
_SERIES_TERMS = 16


def _as_1d(x):
    x = np.asarray(x, dtype=float)
    return np.atleast_1d(x).copy(), x.ndim == 0


def em1x(x):
    """``e^x - 1 - x`` without cancellation near 0."""
    x, scalar = _as_1d(x)
    out = np.expm1(x) - x
    small = np.abs(x) < _SERIES_CUT
    if np.any(small):
        xs = x[small]
        term = 0.5 * xs * xs
        acc = np.zeros_like(xs)
        for j in range(3, _SERIES_TERMS + 3):
            acc += term
            term = term * xs / j
        out[small] = acc
    return float(out[0]) if scalar else out


def em1x_over_x(x):
    """``(e^x - 1 - x) / x`` with the limit 0 at x = 0."""
    x, scalar = _as_1d(x)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUT
    xs = x[small]
    term = 0.5 * xs
    acc = np.zeros_like(xs)
    for j in range(3, _SERIES_TERMS + 3):
        acc += term
        term = term * xs / j
    out[small] = acc
    big = ~small
    xb = x[big]
    out[big] = (np.expm1(xb) - xb) / xb
    return float(out[0]) if scalar else out


def expm1_over_x(x):
    """``(e^x - 1) / x`` with the limit 1 at x = 0."""
    x, scalar = _as_1d(x)
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.expm1(x[nz]) / x[nz]
    return float(out[0]) if scalar else out


def hamiltonian(w, beta, params: Params):
    w = np.asarray(w, dtype=float)
    b = np.abs(np.asarray(beta, dtype=float))
    out = params.M * np.asarray(em1x(w)) + params.chi * b**params.p / params.p
    return out if np.ndim(out) else float(out)


def energy(w, beta, params: Params):
    """Energy level ``k = H / chi`` of a phase point."""
    out = np.asarray(hamiltonian(w, beta, params)) / params.chi
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class EnergyLevel:
    """Level ``k`` with turning points ``w = r0`` and ``w = -r1`` (where beta = 0)."""

    k: float
    r0: float
    r1: float

    def residuals(self, params: Params) -> tuple[float, float]:
        """Relative errors of ``(M/chi) E(r0) = k`` and ``(M/chi) E(-r1) = k``."""
        if self.k == 0:
            return (abs(self.r0), abs(self.r1))
        s = params.M / params.chi
        return (abs(s * em1x(self.r0) - self.k) / self.k, abs(s * em1x(-self.r1) - self.k) / self.k)


def _monotone_root(g, dg, c, hi, max_iter=200):
    """Root of increasing convex ``g(r) = c`` on ``(0, hi]`` with ``g(0) = 0``.

    Newton from the right end is monotone for convex increasing maps; the
    bracket ``[lo, hi]`` is kept so that a bad step falls back to bisection.
    """
    lo, r = 0.0, hi
    for _ in range(max_iter):
        f = g(r) - c
        if f > 0:
            hi = r
        elif f < 0:
            lo = r
        else:
            return r
        d = dg(r)
        r_new = r - f / d if d > 0 else 0.5 * (lo + hi)
        if not lo < r_new < hi:
            r_new = 0.5 * (lo + hi)
        if abs(r_new - r) <= 4e-16 * r_new or hi - lo <= 4e-16 * hi:
            return r_new
        r = r_new
    return r


def turning_points(k: float, params: Params) -> EnergyLevel:
    """Solve ``(M/chi)(e^r0 - r0 - 1) = k`` and ``(M/chi)(e^-r1 + r1 - 1) = k``."""
    k = float(k)
    if not k >= 0:
        raise ValueError(f"energy level must be nonnegative, got {k}")
    if k == 0:
        return EnergyLevel(0.0, 0.0, 0.0)
    c = params.chi * k / params.M
    if not math.isfinite(c):
        raise ValueError(f"energy level overflows: k={k}")
    # E(r) >= r^2/2 and E(log(2c+2)) >= c give an upper bound for r0
    hi0 = min(math.sqrt(2.0 * c), math.log(2.0 * c + 2.0))
    r0 = _monotone_root(em1x, math.expm1, c, hi0)
    # E(-r) >= r^2/3 on (0, 1] and E(-r) >= r - 1
    hi1 = math.sqrt(3.0 * c) if 3.0 * c <= 1.0 else c + 1.0
    r1 = _monotone_root(lambda r: em1x(-r), lambda r: -math.expm1(-r), c, hi1)
    return EnergyLevel(k, r0, r1)
