import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pchemo.core import Grid1D
from pchemo.elliptic import apply_neg_laplacian, face_gradients, solve_chemical, solve_helmholtz_neumann, solve_poisson_neumann
from pchemo.errors import NotSolvable


def test_zero_rhs():
    sol = solve_poisson_neumann(np.zeros(32), Grid1D(32))
    assert np.all(sol.v == 0) and np.all(sol.grad_faces == 0)


def test_cosine_analytic():
    g = Grid1D(256)
    x = g.centers
    sol = solve_poisson_neumann(np.cos(np.pi * x), g)
    assert np.max(np.abs(sol.v - np.cos(np.pi * x) / np.pi**2)) <= 1e-4
    assert sol.grad_faces[0] == 0.0 and sol.grad_faces[-1] == 0.0


def test_face_gradients_of_cosine_second_order():
    errs = []
    for n in (64, 128, 256):
        g = Grid1D(n)
        gf = face_gradients(np.cos(np.pi * g.centers) / np.pi**2, g)
        errs.append(np.max(np.abs(gf[1:-1] + np.sin(np.pi * g.faces[1:-1]) / np.pi)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_face_gradients_examples():
    g = Grid1D(10)
    assert np.all(face_gradients(np.full(10, 3.0), g) == 0)
    gf = face_gradients(g.centers, g)
    np.testing.assert_allclose(gf[1:-1], 1.0, rtol=1e-12)
    assert gf[0] == 0.0 and gf[-1] == 0.0


def test_random_residual():
    rng = np.random.default_rng(3)
    g = Grid1D(300)
    u = rng.uniform(0, 2, 300)
    u *= 1.0 / u.mean()
    rhs = u - 1.0
    v = solve_poisson_neumann(rhs, g).v
    r = apply_neg_laplacian(v, g) - (rhs - rhs.mean())
    assert np.max(np.abs(r)) <= 1e-10 * np.max(np.abs(rhs))


def test_not_solvable():
    g = Grid1D(40)
    with pytest.raises(NotSolvable, match="mean"):
        solve_poisson_neumann(np.full(40, 1e-3) + np.cos(np.pi * g.centers), g)
    # a mean within tolerance is projected out
    f = np.cos(np.pi * g.centers) + 1e-12
    v = solve_poisson_neumann(f, g).v
    assert abs(v.mean()) <= 1e-13 * np.max(np.abs(v))


def test_helmholtz_examples():
    g = Grid1D(256)
    assert np.allclose(solve_helmholtz_neumann(np.full(256, 2.5), g).v, 2.5, rtol=1e-13)
    x = g.centers
    v = solve_helmholtz_neumann(np.cos(np.pi * x), g).v
    assert np.max(np.abs(v - np.cos(np.pi * x) / (1 + np.pi**2))) <= 1e-5
    rng = np.random.default_rng(0)
    f = rng.uniform(0, 3, 256)
    sol = solve_helmholtz_neumann(f, g)
    assert np.max(np.abs(apply_neg_laplacian(sol.v, g) + sol.v - f)) <= 1e-10 * np.max(np.abs(f))
    assert sol.grad_faces[0] == 0.0 and sol.grad_faces[-1] == 0.0


def test_solve_chemical_dispatch():
    g = Grid1D(16)
    u = 1.0 + 0.3 * np.cos(np.pi * g.centers)
    np.testing.assert_array_equal(solve_chemical(u, 1.0, "poisson", g).v, solve_poisson_neumann(u - 1.0, g, mean_scale=1.0).v)
    np.testing.assert_array_equal(solve_chemical(u, 1.0, "helmholtz", g).v, solve_helmholtz_neumann(u, g).v)
    with pytest.raises(ValueError):
        solve_chemical(u, 1.0, "other", g)


def _zero_mean(seed, n):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=n)
    return f - f.mean()


@given(seed=st.integers(0, 2**31), n=st.integers(2, 400))
@settings(max_examples=60)
def test_gauge(seed, n):
    v = solve_poisson_neumann(_zero_mean(seed, n), Grid1D(n)).v
    assert abs(v.mean()) <= 1e-13 * np.max(np.abs(v))


@given(seed=st.integers(0, 2**31), a=st.floats(-10, 10), b=st.floats(-10, 10))
@settings(max_examples=40)
def test_linearity(seed, a, b):
    g = Grid1D(128)
    f, h = _zero_mean(seed, 128), _zero_mean(seed + 1, 128)
    lhs = solve_poisson_neumann(a * f + b * h, g).v
    rhs = a * solve_poisson_neumann(f, g).v + b * solve_poisson_neumann(h, g).v
    scale = abs(a) * np.max(np.abs(solve_poisson_neumann(f, g).v)) + abs(b) * np.max(np.abs(solve_poisson_neumann(h, g).v))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(scale, 1e-300)
