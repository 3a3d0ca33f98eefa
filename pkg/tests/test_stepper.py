import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pchemo.core import Grid1D, State, make_params
from pchemo.diagnostics import total_mass
from pchemo.errors import BlowupSuspected, NegativeDensity
from pchemo.initial import initial_data
from pchemo.stepper import StepperConfig, advective_face_flux, initial_state, simulate, step, suggest_dt

# chi must be positive; this value makes the drift vanish to double precision
NO_DRIFT = 1e-300


def test_config_validation():
    for bad in (dict(t_end=0), dict(t_end=1, dt=0), dict(t_end=1, dt="fast"), dict(t_end=1, cfl_safety=1.5),
                dict(t_end=1, output_every=0), dict(t_end=1, scheme="weno")):
        with pytest.raises(ValueError):
            StepperConfig(**bad)


def test_flux_zero_gradient():
    p = make_params(1, 1.5, 1)
    assert np.all(advective_face_flux(np.ones(8), np.zeros(9), p) == 0)


def test_flux_upwind_and_walls():
    p = make_params(1, 2.0, 1)
    u = np.array([1.0, 2.0, 3.0])
    g = np.array([5.0, 0.5, -0.25, 7.0])
    F = advective_face_flux(u, g, p)
    assert F[0] == 0 and F[-1] == 0
    assert F[1] == 0.5 * 1.0  # a > 0 takes the left cell
    assert F[2] == -0.25 * 3.0  # a < 0 takes the right cell


def test_flux_constant_density():
    p = make_params(2, 1.5, 1.3)
    gf = np.array([0.0, 0.2, -0.1, 0.0])
    F = advective_face_flux(np.full(3, 1.3), gf, p)
    np.testing.assert_allclose(F[1:-1], 1.3 * 2 * np.sign(gf[1:-1]) * np.abs(gf[1:-1]) ** 0.5, rtol=1e-15)


def test_suggest_dt_examples():
    g = Grid1D(100)
    p = make_params(1, 2.0, 1)
    grad = np.zeros(101)
    grad[40] = -2.0
    s = State(np.ones(100), np.zeros(100), 0.0, grad)
    assert suggest_dt(s, p, g, 0.5, dt_max=1.0) == pytest.approx(0.0025, rel=1e-15)
    quiet = State(np.ones(100), np.zeros(100), 0.0, np.zeros(101))
    assert suggest_dt(quiet, p, g, 0.5, dt_max=0.3) == 0.3
    dt1 = suggest_dt(s, make_params(1, 1.5, 1), g, 0.5, dt_max=1.0)
    dt2 = suggest_dt(s, make_params(2, 1.5, 1), g, 0.5, dt_max=1.0)
    assert dt2 == pytest.approx(dt1 / 2, rel=1e-15)


def test_heat_mode_decay():
    p = make_params(NO_DRIFT, 1.5, 1)
    g = Grid1D(256)
    x = g.centers
    u0 = 1 + 0.1 * np.cos(2 * np.pi * x)
    traj = simulate(u0, StepperConfig(t_end=0.1, dt=1e-5, output_every=1000), p, g)
    basis = np.cos(2 * np.pi * x)
    amp = [2 * np.mean((s.u - 1.0) * basis) for s in traj.snapshots]
    for s, a in zip(traj.snapshots, amp):
        assert a == pytest.approx(0.1 * math.exp(-4 * math.pi**2 * s.t), rel=0.01)


def test_heat_equilibrium():
    p = make_params(NO_DRIFT, 1.5, 1)
    g = Grid1D(64)
    traj = simulate(initial_data({"kind": "step", "amplitude": 0.5}, p, g), StepperConfig(t_end=2.0, output_every=500), p, g)
    assert np.max(np.abs(traj.snapshots[-1].u - 1.0)) <= 1e-6


def test_homogeneous_state_exact():
    p = make_params(2.0, 1.5, 1.0)
    g = Grid1D(64)
    traj = simulate(np.ones(64), StepperConfig(t_end=0.5, output_every=50), p, g)
    for s in traj.snapshots:
        assert np.all(s.u == 1.0) and np.all(s.v == 0.0)


@given(
    p=st.floats(1.05, 3.0),
    chi=st.floats(0.1, 5.0),
    seed=st.integers(0, 1000),
    mode=st.sampled_from(["poisson", "helmholtz"]),
)
@settings(max_examples=25, deadline=None)
def test_mass_per_step(p, chi, seed, mode):
    params = make_params(chi, p, 1.0, elliptic_mode=mode)
    g = Grid1D(96)
    u0 = initial_data({"kind": "random", "amplitude": 0.8, "seed": seed}, params, g)
    s = initial_state(u0, params, g)
    m0 = total_mass(s.u, g)
    for _ in range(20):
        s = step(s, suggest_dt(s, params, g), params, g)
        assert abs(total_mass(s.u, g) - m0) <= 1e-13 * m0


def test_central_scheme_conserves():
    p = make_params(1, 1.5, 1)
    g = Grid1D(128)
    u0 = initial_data({"kind": "cosine", "amplitude": 0.4, "mode": 2}, p, g)
    traj = simulate(u0, StepperConfig(t_end=0.2, scheme="central", output_every=50), p, g)
    m = traj.column("mass")
    assert np.max(np.abs(m - m[0])) <= 1e-13


def test_nonnegativity_and_gauge_along_run():
    p = make_params(3.0, 1.5, 1)
    g = Grid1D(128)
    u0 = initial_data({"kind": "bump", "center": 0.7, "width": 0.05, "floor": 0.01}, p, g)
    traj = simulate(u0, StepperConfig(t_end=0.5, output_every=5, norms_q=(1.0, 4.0, math.inf)), p, g)
    assert np.all(np.diff(traj.times) > 0)
    for d in traj.diagnostics:
        assert d["min_u"] >= -1e-12 * d["sup_u"]
        assert abs(d["mean_v"]) <= 1e-12 * d["sup_v"]
        assert d["linf_u"] == d["sup_u"]
        assert d["l1_u"] == pytest.approx(d["mass"], rel=1e-12)


def test_negative_density_detected_and_clipped():
    p = make_params(50.0, 2.0, 1)
    g = Grid1D(64)
    u0 = initial_data({"kind": "step", "amplitude": 0.9}, p, g)
    s = initial_state(u0, p, g)
    with pytest.raises(NegativeDensity):
        step(s, 0.05, p, g)
    clipped = step(s, 0.05, p, g, nonneg_clip=True)
    assert np.all(clipped.u >= 0)
    assert total_mass(clipped.u, g) == pytest.approx(total_mass(s.u, g), rel=1e-13)


def test_blowup_flag_and_raise():
    p = make_params(1, 1.5, 1)
    g = Grid1D(32)
    u0 = initial_data({"kind": "cosine", "amplitude": 0.5}, p, g)
    cfg = StepperConfig(t_end=1.0, blowup_factor=1.2)
    traj = simulate(u0, cfg, p, g)
    assert traj.blowup and traj.n_steps == 1
    with pytest.raises(BlowupSuspected) as ei:
        simulate(u0, cfg, p, g, raise_on_blowup=True)
    assert ei.value.trajectory is not None and ei.value.trajectory.blowup


def test_final_time_hit_exactly():
    p = make_params(1, 1.5, 1)
    g = Grid1D(32)
    traj = simulate(np.ones(32), StepperConfig(t_end=0.0123, dt=1e-3, output_every=3), p, g)
    assert traj.times[-1] == pytest.approx(0.0123, rel=1e-14)
    assert traj.n_steps == 13
