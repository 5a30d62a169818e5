import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lpe_channel import (CFLViolation, ChannelConfig, ChannelGrid, ConfigError, Discretization,
                         IntegratorConfig, ModalStack, NonFiniteStateError, Stepper, cfl_dt, step)
from lpe_channel.timestep import RK4, RK4_IF, steps_for
from lpe_channel.verification.mms import (polynomial_in_time_solution, smoke_solution, solve_mode)
from lpe_channel.verification.suites import random_bc_state


def test_cfl_example_wave_limited():
    # dx/pi >= dy so the y spacing controls: dt = 0.5 * 0.1 / (1/pi)
    cfg = ChannelConfig(L1=4.0, L2=1.0, L3=1.0, Nbuoy=1.0, f=0.0)
    disc = Discretization(Nx=4, Ny=11, M=1)
    assert cfl_dt(cfg, disc, IntegratorConfig(cfl_number=0.5)) == pytest.approx(0.05 * np.pi, rel=1e-12)


def test_cfl_doubling_N_halves_dt():
    disc = Discretization(Nx=4, Ny=11, M=1)
    a = cfl_dt(ChannelConfig(L1=4.0, Nbuoy=1.0), disc)
    b = cfl_dt(ChannelConfig(L1=4.0, Nbuoy=2.0), disc)
    assert b == pytest.approx(a / 2, rel=1e-12)


def test_cfl_plain_rk4_advection_limited():
    cfg = ChannelConfig(L1=4.0, U0bar=50.0)
    disc = Discretization(Nx=4, Ny=11, M=1)
    dt = cfl_dt(cfg, disc, IntegratorConfig(scheme=RK4, cfl_number=0.5))
    assert dt == pytest.approx(0.5 * 1.0 / (np.pi * 50.0), rel=1e-12)
    assert cfl_dt(cfg, disc, IntegratorConfig(scheme=RK4_IF)) > 10 * dt


def test_integrator_validation():
    with pytest.raises(ConfigError):
        IntegratorConfig(scheme="euler")
    with pytest.raises(ConfigError):
        IntegratorConfig(cfl_number=1.5)
    with pytest.raises(ConfigError):
        IntegratorConfig(dt_override=-1.0)


def test_check_dt():
    grid = ChannelGrid(ChannelConfig(), Discretization(Nx=8, Ny=17, M=1))
    st = Stepper(grid)
    limit = cfl_dt(grid.cfg, grid.disc)
    st.check_dt(limit)
    with pytest.raises(CFLViolation):
        st.check_dt(2 * limit)
    st.check_dt(2 * limit, override=True)


def test_steps_for():
    assert steps_for(1.0, 1e-3) == 1000
    with pytest.raises(ConfigError):
        steps_for(0.5, 0.04)


@pytest.mark.parametrize("scheme", [RK4, RK4_IF])
def test_linear_in_time_exact_single_step(scheme):
    cfg = ChannelConfig(f=0.6)
    exact = polynomial_in_time_solution(cfg)
    disc = Discretization(Nx=8, Ny=17, M=1)
    state, grid = solve_mode(exact, cfg, disc, 1, 0.05, 0.05, scheme)
    ref = exact.sample(grid, 0.05)
    for a, b in zip(state.components(), ref.components()):
        np.testing.assert_allclose(a, b, atol=1e-14)


@pytest.mark.parametrize("scheme", [RK4, RK4_IF])
def test_fourth_order_in_time(scheme):
    cfg = ChannelConfig(f=0.5)
    exact = smoke_solution(cfg)
    disc = Discretization(Nx=8, Ny=17, M=1)
    T = 0.4
    ref, grid = solve_mode(exact, cfg, disc, 1, T, 0.025 / 16, scheme)
    errs = []
    for dt in (0.05, 0.025):
        s, _ = solve_mode(exact, cfg, disc, 1, T, dt, scheme)
        errs.append(max(np.abs(a - b).max() for a, b in zip(s.components(), ref.components())))
    assert 13.0 < errs[0] / errs[1] < 19.0


def test_zero_state_stays_zero():
    grid = ChannelGrid(ChannelConfig(f=1.0), Discretization(Nx=8, Ny=17, M=3))
    out = step(ModalStack.zeros(3, grid.shape), None, 1e-3, grid)
    assert out.time == pytest.approx(1e-3)
    assert all(np.all(a == 0) for m in out.modes for a in m.components())
    assert np.all(out.barotropic.u0 == 0)


def _stack(grid, seed=0):
    rng = np.random.default_rng(seed)
    s = ModalStack.zeros(grid.disc.M, grid.shape)
    s.modes = [random_bc_state(n, grid, rng) for n in range(1, grid.disc.M + 1)]
    return s


def test_threads_do_not_change_results(monkeypatch):
    grid = ChannelGrid(ChannelConfig(f=0.4), Discretization(Nx=8, Ny=17, M=3))
    s = _stack(grid)
    monkeypatch.setenv("LPE_THREADS", "1")
    a = Stepper(grid).advance(s, 1e-3, 5)
    monkeypatch.setenv("LPE_THREADS", "3")
    b = Stepper(grid).advance(s, 1e-3, 5)
    for ma, mb in zip(a.modes, b.modes):
        for x, y in zip(ma.components(), mb.components()):
            assert np.array_equal(x, y)


def test_bad_thread_env(monkeypatch):
    grid = ChannelGrid(ChannelConfig(), Discretization(Nx=8, Ny=17, M=1))
    monkeypatch.setenv("LPE_THREADS", "many")
    with pytest.raises(ConfigError):
        Stepper(grid).step(ModalStack.zeros(1, grid.shape), 1e-3)


def test_nan_aborts_with_mode_and_time():
    grid = ChannelGrid(ChannelConfig(), Discretization(Nx=8, Ny=17, M=2))
    s = ModalStack.zeros(2, grid.shape)
    s.modes[1].u[3, 4] = np.nan
    with pytest.raises(NonFiniteStateError) as info:
        Stepper(grid).step(s, 1e-3)
    assert info.value.mode == 2 and info.value.time == pytest.approx(1e-3)


@given(seed=st.integers(0, 2**31), variant=st.sampled_from(["standard", "swapped"]))
def test_stage_projection_keeps_walls(seed, variant):
    grid = ChannelGrid(ChannelConfig(f=0.3), Discretization(Nx=8, Ny=17, M=2))
    s = _stack(grid, seed)
    out = Stepper(grid, bc_variant=variant).step(s, 1e-3)
    N = grid.cfg.Nbuoy
    for m in out.modes:
        lo = m.v[:, 0] - m.psi[:, 0] / N
        hi = m.v[:, -1] + m.psi[:, -1] / N
        if variant == "swapped":
            lo = m.v[:, 0] + m.psi[:, 0] / N
            hi = m.v[:, -1] - m.psi[:, -1] / N
        assert np.abs(lo).max() <= 1e-12 and np.abs(hi).max() <= 1e-12


def test_two_steps_contract_on_standard_walls():
    from lpe_channel.timestep import mode_energy

    grid = ChannelGrid(ChannelConfig(f=0.5), Discretization(Nx=8, Ny=33, M=2))
    s = _stack(grid, 9)
    st = Stepper(grid)
    E = [[mode_energy(m, grid) for m in s.modes]]
    for _ in range(20):
        s = st.advance(s, 1e-3, 2)
        E.append([mode_energy(m, grid) for m in s.modes])
    E = np.array(E)
    assert np.all(np.diff(E, axis=0) <= 1e-12 * E[0])
