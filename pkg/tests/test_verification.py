import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lpe_channel import ChannelConfig, ChannelGrid, Discretization, ModalStack, ModeState
from lpe_channel.expr import compile_field, diff
from lpe_channel.horizontal import inner_product
from lpe_channel.mode_n import STANDARD, SWAPPED, ModeOperatorContext, tendency_n
from lpe_channel.verification.dense import (adjoint_check, assemble_dense, energy_norm,
                                            growth_spectrum, harmonic_coeffs, harmonic_state,
                                            observed_orders, oracle_evolve, positivity_check,
                                            symmetric_part_on_subspace)
from lpe_channel.verification.energy import (Trajectory, energy_audit, energy_matrix, monotone)
from lpe_channel.verification.mms import (ExactSolution, MMSComplianceError, build_exact,
                                          compliance_residual, polynomial_in_time_solution,
                                          smoke_solution, solve_mode)
from lpe_channel.verification.regularity import NORMS, growth_factors, regularity_probe
from lpe_channel.verification.suites import Check, VerifyReport, random_bc_state, run_verify

DISC = Discretization(Nx=8, Ny=17, M=2)


def test_dense_k0_f0_structure():
    cfg = ChannelConfig(f=0.0, Nbuoy=1.5)
    op = assemble_dense(1, 0, cfg, DISC)
    A = op.matrix
    assert np.all(A.imag == 0)
    Ny = DISC.Ny
    blocks = {(i, j): A[i * Ny:(i + 1) * Ny, j * Ny:(j + 1) * Ny].real for i in range(3) for j in range(3)}
    nonzero = {k for k, b in blocks.items() if np.any(b != 0)}
    assert nonzero == {(1, 2), (2, 1)}
    np.testing.assert_allclose(blocks[(1, 2)], -op.D / op.lam)
    np.testing.assert_allclose(blocks[(2, 1)], -(1.5**2) * op.D / op.lam)


def test_dense_constant_vector_matches_tendency():
    cfg = ChannelConfig(f=0.8)
    op = assemble_dense(1, 0, cfg, DISC)
    a, b, c = 1.5, -0.4, 2.0
    U = np.concatenate([np.full(DISC.Ny, x) for x in (a, b, c)])
    rate = -op.matrix @ U
    Ny = DISC.Ny
    np.testing.assert_allclose(rate[:Ny], 0.8 * b, atol=1e-14)
    np.testing.assert_allclose(rate[Ny:2 * Ny], -0.8 * a, atol=1e-14)
    np.testing.assert_allclose(rate[2 * Ny:], 0.0, atol=1e-14)


@pytest.mark.parametrize("m", [0, 1, 2, -2, 4])
def test_dense_matches_tendency_on_harmonics(m):
    cfg = ChannelConfig(f=0.6, Nbuoy=1.2)
    op = assemble_dense(2, m, cfg, DISC, check=True)
    if abs(m) < DISC.Nx // 2:
        assert op.consistency < 1e-12
    grid = ChannelGrid(cfg, DISC)
    rng = np.random.default_rng(m + 10)
    U = rng.standard_normal(3 * DISC.Ny) + (1j * rng.standard_normal(3 * DISC.Ny) if m else 0)
    s = harmonic_state(op, U, grid)
    got = harmonic_coeffs(op, tendency_n(s, None, 0.0, ModeOperatorContext.build(2, grid)), grid)
    np.testing.assert_allclose(got, -op.matrix @ harmonic_coeffs(op, s, grid), atol=1e-11)


def test_coupling_blocks_scale_like_inverse_lambda():
    cfg = ChannelConfig(f=0.0)
    norms = []
    for n in (1, 2, 4, 8):
        full = assemble_dense(n, 1, cfg, DISC, check=False).matrix
        adv = assemble_dense(n, 1, cfg, DISC, couplings=False, check=False).matrix
        norms.append(np.linalg.norm(full - adv) * cfg.lam(n))
    np.testing.assert_allclose(norms, norms[0], rtol=1e-12)


def test_dense_guards():
    from lpe_channel.errors import ConfigError

    with pytest.raises(ConfigError):
        assemble_dense(1, 5, ChannelConfig(), DISC)
    with pytest.raises(ConfigError):
        assemble_dense(1, 0, ChannelConfig(), Discretization(Nx=8, Ny=1001, M=1))


@pytest.mark.parametrize("m", [0, 1, -2])
def test_adjoint_skew_parts(m):
    rep = adjoint_check(assemble_dense(1, m, ChannelConfig(f=0.7), DISC))
    assert rep.coriolis_skew < 1e-14
    assert rep.advection_skew < 1e-14
    assert rep.pairing_defect < 1e-14
    assert rep.subspace_pairing < 1e-14
    assert rep.strong_interior_gap < 1e-12


def test_pure_advection_symmetric_part_vanishes():
    op = assemble_dense(3, 2, ChannelConfig(f=0.0), DISC, couplings=False)
    for variant in (STANDARD, SWAPPED):
        assert np.abs(symmetric_part_on_subspace(op, variant)).max() < 1e-14


def test_positivity_standard_and_swapped():
    cfg = ChannelConfig(Nbuoy=1.0, L3=1.0, f=0.4)
    op = assemble_dense(1, 1, cfg, Discretization(Nx=8, Ny=33, M=1))
    assert positivity_check(op, STANDARD).violation <= 1e-12
    swapped = positivity_check(op, SWAPPED)
    assert swapped.min_eig < 0
    assert growth_spectrum(op, SWAPPED).real.max() > 0.1
    assert growth_spectrum(op, STANDARD).real.max() < 1e-12


def test_oracle_identity_and_contraction():
    cfg = ChannelConfig(f=0.5)
    op = assemble_dense(1, 1, cfg, DISC)
    rng = np.random.default_rng(0)
    U0 = op.bc_projector(STANDARD) @ (rng.standard_normal(3 * DISC.Ny) + 1j * rng.standard_normal(3 * DISC.Ny))
    np.testing.assert_allclose(oracle_evolve(op, U0, 0.0), U0, atol=1e-15)
    norms = [energy_norm(op, oracle_evolve(op, U0, T)) for T in np.linspace(0, 2, 21)]
    assert np.all(np.diff(norms) <= 1e-12 * norms[0])


def test_observed_orders():
    h = np.array([0.1, 0.05, 0.025])
    assert observed_orders(h, 3 * h**2) == pytest.approx([2.0, 2.0])
    assert observed_orders(h, [1e-17, 1e-17, 1e-17], floor=1e-15) == [np.inf, np.inf]


# -- manufactured solutions ---------------------------------------------------

def test_polynomial_exact_to_roundoff():
    cfg = ChannelConfig(f=0.4)
    exact = polynomial_in_time_solution(cfg)
    state, grid = solve_mode(exact, cfg, DISC, 1, 0.2, 0.05)
    ref = exact.sample(grid, 0.2)
    for a, b in zip(state.components(), ref.components()):
        np.testing.assert_allclose(a, b, atol=1e-13)


@given(N=st.floats(0.3, 3.0), L2=st.floats(0.5, 3.0), variant=st.sampled_from([STANDARD, SWAPPED]))
def test_blended_solutions_comply(N, L2, variant):
    cfg = ChannelConfig(Nbuoy=N, L2=L2)
    ex = build_exact("x*y", "cos(t)*y + 1", "sin(x)*exp(y)", cfg, variant)
    assert compliance_residual(ex, cfg, variant) < 1e-12


def test_noncompliant_solution_rejected():
    from lpe_channel.expr import parse_field_expression as P

    cfg = ChannelConfig()
    ex = ExactSolution(P("0"), P("1"), P("0"))
    with pytest.raises(MMSComplianceError) as info:
        solve_mode(ex, cfg, DISC, 1, 0.1, 0.05)
    assert info.value.residual == pytest.approx(1.0)


# -- energy audit and regularity ------------------------------------------------

def _mode1_trajectory(cfg, disc, T=0.2, dt=1e-3, every=2, seed=1, variant=STANDARD):
    from lpe_channel import Stepper

    grid = ChannelGrid(cfg, disc)
    stack = ModalStack.zeros(disc.M, grid.shape)
    stack.modes[0] = random_bc_state(1, grid, np.random.default_rng(seed), variant=variant)
    traj = Trajectory(grid, bc_variant=variant)
    traj.append(stack)
    st = Stepper(grid, bc_variant=variant)
    for k in range(int(round(T / dt)) // every):
        stack = st.advance(stack, dt, every)
        traj.append(stack)
    return traj


def test_energy_audit_zero_trajectory():
    grid = ChannelGrid(ChannelConfig(), DISC)
    traj = Trajectory(grid)
    for t in (0.0, 0.1, 0.2):
        s = ModalStack.zeros(2, grid.shape)
        s.time = t
        traj.append(s)
    for rep in energy_audit(traj):
        assert not np.any(rep.E) and not np.any(rep.flux) and not np.any(rep.residual)


def test_mode1_dissipates_through_walls():
    traj = _mode1_trajectory(ChannelConfig(f=0.3), Discretization(Nx=8, Ny=33, M=1))
    reports = energy_audit(traj)
    E = energy_matrix(reports)[:, 1]
    flux = np.array([r.flux[1] for r in reports])
    assert np.all(flux > 0)
    assert np.all(np.diff(E) < 0)
    # the budget closes up to the time-differencing error of the audit
    res = np.array([r.residual[1] for r in reports])
    assert np.abs(res).max() < 1e-4 * E[0]


def test_barotropic_audit():
    from lpe_channel import BarotropicState, Stepper
    from lpe_channel.mode_zero import velocity_from_vorticity

    grid = ChannelGrid(ChannelConfig(f=1.0), Discretization(Nx=8, Ny=33, M=1))
    X, Y = grid.mesh()
    u, v, _ = velocity_from_vorticity(np.sin(2 * np.pi * X) * np.sin(np.pi * Y), np.zeros(33), grid)
    stack = ModalStack(BarotropicState(u, v), [ModeState.zeros(1, grid.shape)])
    traj = Trajectory(grid)
    traj.append(stack)
    st = Stepper(grid)
    for _ in range(20):
        stack = st.advance(stack, 1e-2, 1)
        traj.append(stack)
    E0 = energy_matrix(energy_audit(traj))[:, 0]
    assert np.abs(E0 - E0[0]).max() <= 1e-8 * E0[0]
    assert all(r.flux[0] == 0.0 for r in energy_audit(traj))


def test_monotone_helper():
    assert monotone([3, 2, 2, 1], 0.0)
    assert not monotone([3, 2, 2.1], 0.05)
    assert monotone([1, 2, 3], 0.0, increasing=True)


def test_regularity_zero_and_modal_identity():
    grid = ChannelGrid(ChannelConfig(), DISC)
    traj = Trajectory(grid)
    for t in (0.0, 0.1, 0.2):
        s = ModalStack.zeros(2, grid.shape)
        s.time = t
        traj.append(s)
    assert all(not np.any(traj_v) for k, traj_v in regularity_probe(traj).items() if k != "t")

    traj = _mode1_trajectory(ChannelConfig(L3=2.0), Discretization(Nx=8, Ny=17, M=1), T=0.02)
    norms = regularity_probe(traj)
    lam = np.pi / 2.0
    U0 = traj.stacks[0].modes[0].components()
    assert norms["U_zz"][0] == pytest.approx(lam**2 * np.sqrt(inner_product(U0, U0, traj.grid)), rel=1e-13)


def test_regularity_matches_exact_solution_norms():
    cfg = ChannelConfig(f=0.5)
    exact = smoke_solution(cfg)
    disc = Discretization(Nx=8, Ny=33, M=1)
    grid = ChannelGrid(cfg, disc)
    traj = Trajectory(grid)

    def record(t, s, g):
        stk = ModalStack.zeros(1, g.shape)
        stk.modes = [s]
        stk.time = t
        traj.append(stk)

    s0 = exact.sample(grid, 0.0)
    record(0.0, ModeState(1, *s0.components()), grid)
    solve_mode(exact, cfg, disc, 1, 0.5, 0.01, callback=record)
    got = regularity_probe(traj)

    X, Y = grid.mesh()
    lam = cfg.lam(1)

    def analytic(vars_):
        out = []
        for t in got["t"]:
            comps = []
            for e in exact.components():
                for v in vars_:
                    e = diff(e, v)
                comps.append(np.broadcast_to(compile_field(e)(X, Y, t), X.shape))
            out.append(np.sqrt(inner_product(comps, comps, grid)))
        return np.array(out)

    ref = {"U_x": analytic("x"), "U_xx": analytic("xx"), "U_yy": analytic("yy"),
           "U_xt": analytic("xt"), "U_zz": lam**2 * analytic("")}
    ref.update(U_tz=lam * analytic("t"), U_xxz=lam * ref["U_xx"], U_txz=lam * ref["U_xt"],
               U_xzz=lam**2 * ref["U_x"])
    for k in NORMS:
        assert np.abs(got[k] - ref[k]).max() <= 0.02 * ref[k].max(), k
    assert all(g < 10 for g in growth_factors(got).values())


# -- suites ---------------------------------------------------------------------

def test_verify_report_json_round_trip():
    rep = VerifyReport("x", [Check("a", True, 1e-3, 1.0, {"orders": [np.inf, 2.0]})])
    data = json.loads(rep.to_json())
    assert data["passed"] is True and data["checks"][0]["detail"]["orders"][0] == "inf"


def test_transforms_suite_fast_and_passing():
    import time

    t0 = time.perf_counter()
    rep = run_verify("transforms")
    assert rep.passed
    assert time.perf_counter() - t0 < 1.0


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_verify("everything")
