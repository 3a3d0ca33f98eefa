"""Period ``T(k)`` of the closed orbit at energy level ``k``.

Two independent routes are provided:

* :func:`period_quadrature` evaluates ``T = 2 * integral_{-r1}^{r0} dw / |w_x|``.
  The integrand has an inverse-power singularity at each turning point;
  substituting ``w = r0 - s^2`` (right) and ``w = -r1 + s^2`` (left) leaves
  a factor ``s^((2-p)/p)`` which double-exponential quadrature handles
  without special treatment.
* :func:`period_oracle` integrates the Hamiltonian ODE around one loop and
  locates the return to ``beta = 0`` by event detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..core import Params
from ..errors import EventNotFound, QuadratureFail
from .hamiltonian import EnergyLevel, em1x_over_x, energy, expm1_over_x, turning_points

QUAD_RTOL = 1e-9
ODE_RTOL = 1e-13


def tanh_sinh(f, a: float, b: float, rtol: float = QUAD_RTOL, max_level: int = 12, t_max: float = 4.5):
    """Tanh-sinh quadrature of ``f`` on ``[a, b]``, halving the step until converged.

    Abscissae near ``a`` are generated as ``a + (b - a) * d`` with ``d``
    computed directly, so integrands singular at ``a`` can be evaluated at
    points arbitrarily close to it.  Returns ``(value, error_estimate)``.
    """
    if a == b:
        return 0.0, 0.0
    span = b - a
    prev = None
    for level in range(1, max_level + 1):
        h = 2.0 ** (-level)
        t = np.arange(-t_max, t_max + 0.5 * h, h)
        sh = 0.5 * math.pi * np.sinh(t)
        wts = h * 0.25 * math.pi * np.cosh(t) / np.cosh(sh) ** 2
        d = np.where(t < 0, 1.0 / (1.0 + np.exp(-2.0 * sh)), 1.0 / (1.0 + np.exp(2.0 * sh)))
        x = np.where(t < 0, a + span * d, b - span * d)
        keep = (d > 0) & (wts > 0)
        fx = np.asarray(f(x[keep]), dtype=float)
        val = span * float(np.sum(wts[keep] * fx))
        if not math.isfinite(val):
            raise QuadratureFail(f"non-finite integrand on [{a}, {b}] at level {level}")
        if prev is not None:
            err = abs(val - prev)
            if level >= 3 and err <= rtol * abs(val):
                return val, err
        prev = val
    raise QuadratureFail(
        f"tanh-sinh did not reach rtol={rtol:.1e} on [{a}, {b}] within {max_level} levels "
        f"(last change {err:.2e}, value {val:.6e})"
    )


def _half_integrand(turn: float, alpha: float):
    """Integrand in ``s`` for the leg from ``w = 0`` to turning point ``turn``.

    With ``w = turn - sign(turn) s^2`` the energy gap
    ``B = E(turn) - E(w) = expm1(w) expm1(d) + E(d)``, ``d = turn - w``,
    is positive and free of cancellation; ``B / s^2`` stays finite at s = 0.
    """
    sgn = 1.0 if turn > 0 else -1.0

    def f(s):
        d = sgn * s * s
        w = turn - d
        gap = sgn * (np.expm1(w) * expm1_over_x(d) + em1x_over_x(d))
        return 2.0 * s ** (1.0 - 2.0 * alpha) * gap ** (-alpha)

    return f


def period_integral(level: EnergyLevel, params: Params, rtol: float = QUAD_RTOL) -> float:
    """``T`` from a precomputed energy level."""
    if level.k <= 0:
        raise ValueError("period is defined for k > 0")
    p, M, chi = params.p, params.M, params.chi
    alpha = (p - 1.0) / p
    right, _ = tanh_sinh(_half_integrand(level.r0, alpha), 0.0, math.sqrt(level.r0), rtol)
    left, _ = tanh_sinh(_half_integrand(-level.r1, alpha), 0.0, math.sqrt(level.r1), rtol)
    # |w_x| = chi (p M / chi)^alpha B^alpha
    scale = chi * (p * M / chi) ** alpha
    return 2.0 * (right + left) / scale


def period_quadrature(k: float, params: Params, rtol: float = QUAD_RTOL) -> float:
    return period_integral(turning_points(k, params), params, rtol)


def hamiltonian_rhs(params: Params, with_potential: bool = False):
    """Right-hand side ``(w, beta[, V])' = (chi |beta|^(p-2) beta, M (1 - e^w)[, beta])``."""
    chi, M, pm1 = params.chi, params.M, params.p - 1.0

    if with_potential:
        def rhs(x, y):
            b = y[1]
            return [chi * math.copysign(abs(b) ** pm1, b), -M * math.expm1(y[0]), b]
    else:
        def rhs(x, y):
            b = y[1]
            return [chi * math.copysign(abs(b) ** pm1, b), -M * math.expm1(y[0])]
    return rhs


def orbit_scales(level: EnergyLevel, params: Params) -> tuple[float, float]:
    """Magnitudes of ``w`` and ``beta`` on the orbit, for absolute tolerances."""
    return max(level.r0, level.r1), (params.p * level.k) ** (1.0 / params.p)


@dataclass(frozen=True)
class Orbit:
    xs: np.ndarray
    ws: np.ndarray
    betas: np.ndarray
    k: float
    period: float | None = None

    def energy_deviation(self, params: Params) -> float:
        """``max |(M/chi) E(w) + |beta|^p / p - k|`` over the samples."""
        return float(np.max(np.abs(np.asarray(energy(self.ws, self.betas, params)) - self.k)))


def _leg(rhs, y0, direction, horizon, rtol, atol, max_doublings=40):
    """Integrate until ``beta`` crosses zero in ``direction``; extend the horizon as needed."""

    def crossing(x, y):
        return y[1]

    crossing.terminal = True
    crossing.direction = direction
    x0, y = 0.0, np.asarray(y0, dtype=float)
    xs, ys = [np.array([0.0])], [y[:, None]]
    for _ in range(max_doublings):
        sol = solve_ivp(rhs, (x0, x0 + horizon), y, method="DOP853", rtol=rtol, atol=atol, events=crossing)
        if sol.status == -1:
            raise EventNotFound(f"integration failed: {sol.message}")
        xs.append(sol.t[1:])
        ys.append(sol.y[:, 1:])
        if sol.t_events[0].size:
            return np.concatenate(xs), np.concatenate(ys, axis=1), float(sol.t_events[0][0]), sol.y_events[0][0]
        x0, y = float(sol.t[-1]), sol.y[:, -1]
        horizon *= 2.0
    raise EventNotFound(f"no beta = 0 crossing within x = {x0 + horizon:.3e}")


def integrate_loop(k: float, params: Params, rtol: float = ODE_RTOL) -> Orbit:
    """One full loop from ``(r0, 0)``: down to ``(-r1, 0)`` and back.

    The loop is split at the half-way crossing so that each event search
    starts just after a zero of ``beta``.
    """
    level = turning_points(k, params)
    if level.k <= 0:
        raise ValueError("period is defined for k > 0")
    wscale, bscale = orbit_scales(level, params)
    atol = np.array([1e-15 * wscale, 1e-15 * bscale])
    rhs = hamiltonian_rhs(params)
    horizon = 2.0 * math.pi / math.sqrt(params.chi * params.M)

    x1, y1, half, ye = _leg(rhs, [level.r0, 0.0], +1, horizon, rtol, atol)
    if not ye[0] < 0:
        raise EventNotFound(f"first crossing at w = {ye[0]:.3e}, expected the left turning point")
    x2, y2, rest, ye2 = _leg(rhs, ye, -1, max(half, horizon), rtol, atol)
    if not abs(ye2[0] - level.r0) <= 1e-6 * level.r0:
        raise EventNotFound(f"loop closed at w = {ye2[0]:.6e}, expected r0 = {level.r0:.6e}")
    # each leg ends exactly on its event point
    xs = np.concatenate([x1, half + x2[1:]])
    ys = np.concatenate([y1, y2[:, 1:]], axis=1)
    return Orbit(xs, ys[0], ys[1], level.k, half + rest)


def period_oracle(k: float, params: Params, rtol: float = ODE_RTOL) -> float:
    return integrate_loop(k, params, rtol).period
