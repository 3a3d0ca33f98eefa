import dataclasses

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from pchemo.core import Grid1D, State, admissible, flux_coefficient, make_params, project_initial_data
from pchemo.errors import NonAdmissible, ZeroData


def test_make_params_valid():
    p = make_params(1, 1.5, 1, 1, "poisson", 0)
    assert (p.chi, p.p, p.M, p.length, p.elliptic_mode, p.eps_reg) == (1.0, 1.5, 1.0, 1.0, "poisson", 0.0)


def test_p_equal_one_names_constraint():
    with pytest.raises(NonAdmissible, match=r"p > 1"):
        make_params(1, 1, 1)


@pytest.mark.parametrize(
    "kw",
    [
        dict(chi=-1, p=1.5, M=1),
        dict(chi=0, p=1.5, M=1),
        dict(chi=1, p=1.5, M=0),
        dict(chi=1, p=1.5, M=1, length=0),
        dict(chi=1, p=1.5, M=1, eps_reg=-1e-3),
        dict(chi=1, p=0.5, M=1),
        dict(chi=float("nan"), p=1.5, M=1),
        dict(chi=1, p=float("inf"), M=1),
        dict(chi=1, p=1.5, M=1, elliptic_mode="other"),
        dict(chi="x", p=1.5, M=1),
    ],
)
def test_make_params_rejects(kw):
    with pytest.raises(NonAdmissible):
        make_params(**kw)


def test_params_immutable():
    p = make_params(1, 1.5, 1)
    with pytest.raises(dataclasses.FrozenInstanceError):
        p.chi = 2.0


def test_admissible():
    assert admissible(1.01, 1) and admissible(50.0, 1)
    assert not admissible(1.0, 1)
    assert admissible(1.4, 3) and not admissible(1.6, 3)


def test_grid_centers():
    g = Grid1D(8, 2.0)
    assert g.h == 0.25
    np.testing.assert_allclose(g.centers, (np.arange(8) + 0.5) * 0.25, rtol=0, atol=0)
    assert np.all(np.diff(g.centers) > 0) and g.centers[0] > 0 and g.centers[-1] < 2.0
    with pytest.raises(NonAdmissible):
        Grid1D(0)
    with pytest.raises(ValueError):
        g.check_field(np.zeros(7))


def test_state_is_read_only():
    s = State(np.ones(4), np.zeros(4), 0.0)
    with pytest.raises(ValueError):
        s.u[0] = 2.0
    with pytest.raises(ValueError):
        State(np.ones(4), np.zeros(4), -1.0)


def test_flux_examples():
    assert flux_coefficient(0.0, make_params(1, 1.5, 1)) == 0.0
    assert flux_coefficient(0.0, make_params(1, 1.01, 1)) == 0.0
    assert flux_coefficient(2.0, make_params(3, 2.0, 1)) == 6.0
    # high-precision oracle for |b|^(p-2) b
    ref = float(mpmath.power(mpmath.mpf("0.5"), mpmath.mpf("-0.5")) * mpmath.mpf("-0.5"))
    got = flux_coefficient(-0.5, make_params(1, 1.5, 1))
    assert got == pytest.approx(ref, rel=1e-15)
    assert got == pytest.approx(-0.7071, abs=1e-4)


def test_flux_regularized():
    p = make_params(2.0, 1.5, 1, eps_reg=0.1)
    b = 0.3
    assert flux_coefficient(b, p) == pytest.approx(2.0 * (b * b + 0.01) ** -0.25 * b, rel=1e-15)
    assert flux_coefficient(0.0, p) == 0.0


betas = st.floats(-1e6, 1e6, allow_nan=False)
pvals = st.floats(1.01, 4.0)
eps = st.sampled_from([0.0, 1e-3, 0.5])


@given(b=betas, p=pvals, e=eps)
def test_flux_odd(b, p, e):
    params = make_params(1.7, p, 1, eps_reg=e)
    assert flux_coefficient(-b, params) == -flux_coefficient(b, params)


@given(p=pvals, e=eps)
@settings(max_examples=50)
def test_flux_monotone(p, e):
    params = make_params(1.0, p, 1, eps_reg=e)
    b = np.concatenate([-np.logspace(3, -8, 200), [0.0], np.logspace(-8, 3, 200)])
    f = flux_coefficient(b, params)
    assert np.all(np.diff(f) >= 0)


def test_projection_constant_and_identity():
    g = Grid1D(16)
    params = make_params(1, 1.5, 1.7)
    np.testing.assert_allclose(project_initial_data(np.full(16, 3.0), params, g), 1.7, rtol=1e-15)
    u = np.full(16, 1.7)
    assert np.array_equal(project_initial_data(u, params, g), u)


def test_projection_cosine_against_quadrature():
    mean, _ = quad(lambda x: 1 + np.cos(2 * np.pi * x), 0, 1)
    assert mean == pytest.approx(1.0, abs=1e-14)
    g = Grid1D(200)
    u0 = 1 + np.cos(2 * np.pi * g.centers)
    out = project_initial_data(u0, make_params(1, 1.5, 2.0), g)
    # the midpoint sum of cos(2 pi x) vanishes, so the scale is exactly 2 up to rounding
    np.testing.assert_allclose(out, 2.0 * u0, rtol=1e-13, atol=1e-13)


def test_projection_errors():
    g = Grid1D(4)
    params = make_params(1, 1.5, 1)
    with pytest.raises(ZeroData):
        project_initial_data(np.zeros(4), params, g)
    with pytest.raises(ValueError):
        project_initial_data(np.array([1.0, -0.1, 1.0, 1.0]), params, g)


@given(
    vals=st.lists(st.floats(0, 1e3, allow_nan=False), min_size=5, max_size=60).filter(lambda v: max(v) > 1e-6),
    M=st.floats(1e-3, 1e3),
)
def test_projection_mean(vals, M):
    g = Grid1D(len(vals))
    out = project_initial_data(np.array(vals), make_params(1, 1.5, M), g)
    assert np.all(out >= 0)
    assert abs(np.mean(out) - M) <= 1e-14 * M
