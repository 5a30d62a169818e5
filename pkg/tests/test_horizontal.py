import numpy as np
import pytest
from hypothesis import given, strategies as st

from lpe_channel import ChannelConfig, ChannelGrid, Discretization
from lpe_channel.errors import CompatibilityError, ConfigError
from lpe_channel.horizontal import (YOperator, advect_x_exact, ddx, ddy, inner_product,
                                    poisson_dirichlet, poisson_neumann)


def make(Nx=16, Ny=33, **kw):
    cfg = ChannelConfig(**kw)
    return ChannelGrid(cfg, Discretization(Nx=Nx, Ny=Ny, M=1))


@pytest.mark.parametrize("Ny,L2", [(5, 1.0), (33, 1.0), (65, 2.7)])
def test_sbp_identity(Ny, L2):
    yop = YOperator(Ny, L2)
    B = np.zeros((Ny, Ny))
    B[0, 0], B[-1, -1] = -1.0, 1.0
    Q = yop.H @ yop.D
    assert np.abs(Q + Q.T - B).max() <= 1e-13


def test_D_exact_on_linear():
    g = make(Ny=17, L2=3.0)
    X, Y = g.mesh()
    np.testing.assert_allclose(ddy(2.0 * Y - 1.0, g), 2.0, atol=1e-13)
    np.testing.assert_allclose(ddy(Y, g), 1.0, atol=1e-13)


def test_ddx_sine_and_constant():
    g = make(L1=2.5)
    X, _ = g.mesh()
    k = 2 * np.pi / 2.5
    np.testing.assert_allclose(ddx(np.sin(k * X), g), k * np.cos(k * X), atol=1e-12)
    np.testing.assert_allclose(ddx(np.full(g.shape, 3.0), g), 0.0, atol=1e-13)


@given(a=st.integers(0, 3), b=st.integers(0, 3), seed=st.integers(0, 1000))
def test_ddx_product_rule_on_resolved_harmonics(a, b, seed):
    g = make(Nx=16)
    X, Y = g.mesh()
    ph = np.random.default_rng(seed).uniform(0, 2 * np.pi, 2)
    f1 = np.cos(2 * np.pi * a * X + ph[0]) * (1 + Y)
    f2 = np.sin(2 * np.pi * b * X + ph[1])
    lhs = ddx(f1 * f2, g)
    rhs = ddx(f1, g) * f2 + f1 * ddx(f2, g)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_ddx_is_skew():
    g = make(Nx=8)
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
    assert abs(np.sum(ddx(a, g) * b) + np.sum(a * ddx(b, g))) < 1e-12


def _ddy_errors(fn, dfn, sizes, interior):
    out = []
    for Ny in sizes:
        g = make(Nx=4, Ny=Ny)
        _, Y = g.mesh()
        err = np.abs(ddy(fn(Y), g) - dfn(Y))
        out.append((err[:, 1:-1] if interior else err).max())
    return np.array(out)


def test_ddy_sine_interior_second_order():
    e = _ddy_errors(lambda y: np.sin(np.pi * y), lambda y: np.pi * np.cos(np.pi * y),
                    (33, 65, 129), interior=True)
    ratios = e[:-1] / e[1:]
    assert np.all(np.abs(ratios - 4.0) < 0.2)


def test_ddy_square_boundary_first_order():
    # central rows are exact on quadratics; the one-sided wall rows of the
    # second-order SBP operator carry an O(dy) error, so halving dy halves it
    e = _ddy_errors(lambda y: y**2, lambda y: 2 * y, (17, 33, 65), interior=False)
    assert np.allclose(e[:-1] / e[1:], 2.0, rtol=1e-8)
    e_int = _ddy_errors(lambda y: y**2, lambda y: 2 * y, (17, 33), interior=True)
    assert e_int.max() < 1e-12


def test_advect_exact_shift():
    g = make(Nx=32, U0bar=1.0)
    X, Y = g.mesh()
    out = advect_x_exact(np.sin(2 * np.pi * X), 1.0, 0.25, g)
    np.testing.assert_allclose(out, np.sin(2 * np.pi * (X - 0.25)), atol=1e-12)
    f = np.cos(4 * np.pi * X) * Y
    np.testing.assert_allclose(advect_x_exact(f, 1.0, 0.0, g), f, atol=1e-15)


def test_advect_constant_source():
    g = make(Nx=16)
    G = np.full(g.shape, 0.3)
    out = advect_x_exact(g.zeros(), 1.0, 0.7, g, source=lambda s: G)
    np.testing.assert_allclose(out, 0.3 * 0.7, atol=1e-14)


@given(t=st.floats(0.0, 3.0), s=st.floats(0.0, 3.0))
def test_advect_group_property(t, s):
    g = make(Nx=16)
    X, Y = g.mesh()
    f = np.sin(2 * np.pi * X) * Y + np.cos(6 * np.pi * X)
    once = advect_x_exact(f, 1.3, t + s, g)
    twice = advect_x_exact(advect_x_exact(f, 1.3, t, g), 1.3, s, g)
    assert np.abs(once - twice).max() < 1e-12


def _poisson_error(Ny, stencil):
    g = make(Nx=8, Ny=Ny)
    X, Y = g.mesh()
    rhs = np.sin(np.pi * Y) * np.cos(2 * np.pi * X)
    s = poisson_dirichlet(rhs, g, stencil)
    return np.abs(s + rhs / (5 * np.pi**2)).max()


@pytest.mark.parametrize("stencil", ["compact", "sbp"])
def test_poisson_dirichlet_second_order(stencil):
    e = np.array([_poisson_error(n, stencil) for n in (17, 33, 65)])
    assert e[-1] < 1e-3
    assert np.all(np.abs(e[:-1] / e[1:] - 4.0) < 0.3)


def test_poisson_zero_and_bad_stencil():
    g = make()
    assert np.all(poisson_dirichlet(g.zeros(), g) == 0.0)
    with pytest.raises(ConfigError):
        poisson_dirichlet(g.zeros(), g, "nine-point")


def test_poisson_neumann_zero():
    g = make()
    np.testing.assert_array_equal(poisson_neumann(g.zeros(), 0.0, 0.0, g), 0.0)


def test_poisson_neumann_geostrophic_balance():
    # phi_y = -f u0 with u0 = 1, f = 1 -> phi = -y + L2/2
    g = make(L2=2.0)
    _, Y = g.mesh()
    phi = poisson_neumann(g.zeros(), -1.0, -1.0, g)
    np.testing.assert_allclose(phi, -Y + 1.0, atol=1e-12)


def test_poisson_neumann_incompatible():
    g = make()
    with pytest.raises(CompatibilityError) as info:
        poisson_neumann(np.ones(g.shape), 0.0, 0.0, g)
    assert info.value.defect == pytest.approx(1.0)  # area of the unit channel


def test_poisson_neumann_manufactured_second_order():
    errs = []
    for Ny in (17, 33, 65):
        g = make(Nx=8, Ny=Ny)
        X, Y = g.mesh()
        exact = np.cos(np.pi * Y) * np.cos(2 * np.pi * X) + np.cos(np.pi * Y)
        rhs = -np.pi**2 * exact - 4 * np.pi**2 * np.cos(np.pi * Y) * np.cos(2 * np.pi * X)
        phi = poisson_neumann(rhs, 0.0, 0.0, g)
        errs.append(np.abs(phi - exact).max())
    errs = np.array(errs)
    assert np.all(errs[:-1] / errs[1:] > 3.5)


def test_inner_product_unit_channel():
    N = 2.5
    g = make(Ny=9, Nbuoy=N)
    U = (np.ones(g.shape), g.zeros(), np.full(g.shape, N))
    assert inner_product(U, U, g) == pytest.approx(2.0, rel=1e-14)


@given(a=st.floats(-10, 10), seed=st.integers(0, 1000))
def test_inner_product_bilinear_symmetric(a, seed):
    g = make(Nx=8, Ny=9, Nbuoy=0.7)
    rng = np.random.default_rng(seed)
    U = [rng.standard_normal(g.shape) for _ in range(3)]
    V = [rng.standard_normal(g.shape) for _ in range(3)]
    base = inner_product(U, V, g)
    assert inner_product([a * x for x in U], V, g) == pytest.approx(a * base, rel=1e-12, abs=1e-12)
    assert inner_product(V, U, g) == pytest.approx(base, rel=1e-14)
    assert inner_product(U, U, g) >= 0


def test_inner_product_shape_checks():
    g = make(Nx=8, Ny=9)
    with pytest.raises(ValueError):
        inner_product([g.zeros()], [g.zeros(), g.zeros()], g)
    with pytest.raises(ValueError):
        inner_product([np.zeros((3, 3))], [np.zeros((3, 3))], g)
