"""Named verification suites and the checks they are built from.

Each ``check_*`` function runs one experiment and returns a :class:`Check`
(or a list of them).  ``run_verify`` groups them into the suites exposed on
the command line; the acceptance tests call the same functions with the
acceptance parameters.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..config import ChannelConfig, Discretization
from ..domain import reconstruct_physical
from ..horizontal import ChannelGrid, ddx, ddy, inner_product
from ..mode_n import STANDARD, SWAPPED, ModeOperatorContext, boundary_flux_n, enforce_characteristic_bc, tendency_n
from ..mode_zero import (apply_A0, energy as barotropic_energy, project_barotropic,
                         solve_stationary_A0, step_barotropic)
from ..state import BarotropicState, ModalStack, ModeState
from ..timestep import RK4_IF, IntegratorConfig, Stepper, mode_energy, steps_for
from ..vertical import VerticalBasis, analyze
from . import dense
from .energy import (Trajectory, derivative_bound_ratio, energy_audit, energy_matrix, kappa_estimate,
                     monotone)
from .mms import mms_run, smoke_solution, solve_mode
from .regularity import growth_factors, regularity_probe

SUITES = ("transforms", "adjoint", "energy", "oracle", "mms")


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: value={self.value:.3e} threshold={self.threshold:.3e}"


@dataclass
class VerifyReport:
    suite: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        def clean(o):
            if isinstance(o, float) and not math.isfinite(o):
                return str(o)
            if isinstance(o, dict):
                return {k: clean(v) for k, v in o.items()}
            if isinstance(o, (list, tuple)):
                return [clean(v) for v in o]
            if isinstance(o, (np.floating, np.integer)):
                return clean(o.item())
            if isinstance(o, complex):
                return [o.real, o.imag]
            return o
        return json.dumps(clean({"suite": self.suite, "passed": self.passed,
                                 "checks": [asdict(c) for c in self.checks]}), indent=2)


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        out = fn(*a, **kw)
        for c in (out if isinstance(out, list) else [out]):
            c.seconds = time.perf_counter() - t0
        return out
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _random_smooth(grid: ChannelGrid, rng, harmonics: int = 3) -> np.ndarray:
    X, Y = grid.mesh()
    out = np.zeros(grid.shape)
    L1, L2 = grid.cfg.L1, grid.cfg.L2
    for _ in range(harmonics):
        m = rng.integers(0, 3)
        a, ph, ky = rng.standard_normal(), rng.uniform(0, 2 * np.pi), rng.uniform(0.5, 3.0)
        out += a * np.cos(2 * np.pi * m * X / L1 + ph) * np.cos(ky * np.pi * Y / L2 + ph)
    return out


def random_bc_state(n: int, grid: ChannelGrid, rng, smooth: bool = True,
                    variant: str = STANDARD) -> ModeState:
    """A random mode state projected onto the wall-condition subspace."""
    if smooth:
        comps = [_random_smooth(grid, rng) for _ in range(3)]
    else:
        comps = [rng.standard_normal(grid.shape) for _ in range(3)]
    return enforce_characteristic_bc(ModeState(n, *comps), grid.cfg.Nbuoy, variant, inplace=True)


# -- transforms -----------------------------------------------------------------

@_timed
def check_vertical_basis(L3: float = 1.0, M: int = 8, Nz: int | None = None, seed: int = 0) -> Check:
    """Discrete orthonormality of both families and the analyze/reconstruct round trip."""
    Nz = 4 * M if Nz is None else Nz
    basis = VerticalBasis(L3, M, Nz)
    GU, GW = basis.gram()
    ortho = max(np.abs(GU - np.eye(M + 1)).max(), np.abs(GW - np.eye(M)).max())

    cfg = ChannelConfig(L3=L3, f=0.3)
    disc = Discretization(Nx=8, Ny=9, M=M, Nz_quad=Nz)
    grid = ChannelGrid(cfg, disc)
    rng = np.random.default_rng(seed)
    modes = [ModeState(n, *(rng.standard_normal(grid.shape) for _ in range(3))) for n in range(1, M + 1)]
    stack = ModalStack(BarotropicState(rng.standard_normal(grid.shape), rng.standard_normal(grid.shape)), modes)
    phys = reconstruct_physical(stack, cfg, disc, grid)
    back, resid = analyze(phys, basis)
    trip = max(np.abs(back.barotropic.u0 - stack.barotropic.u0).max(),
               np.abs(back.barotropic.v0 - stack.barotropic.v0).max(),
               max(np.abs(np.stack(a.components()) - np.stack(b.components())).max()
                   for a, b in zip(back.modes, stack.modes)))
    value = float(max(ortho, trip, resid))
    return Check("vertical basis orthonormality and round trip", value <= 1e-10, value, 1e-10,
                 {"orthonormality": float(ortho), "round_trip": float(trip),
                  "truncation_residual": float(resid), "M": M, "Nz": Nz})


@_timed
def check_sbp(Ny: int = 33, L2: float = 1.0, seed: int = 0) -> list[Check]:
    from ..horizontal import YOperator, XSpectral

    yop = YOperator(Ny, L2)
    Q = yop.H @ yop.D
    sbp = float(np.abs(Q + Q.T - yop.boundary_selector).max())
    xs = XSpectral(16, 1.0)
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 16))
    skew = abs(float(np.dot(xs.ddx(a), b) + np.dot(a, xs.ddx(b))))
    return [Check("SBP identity", sbp <= 1e-13, sbp, 1e-13),
            Check("ddx skew-adjoint", skew <= 1e-12, skew, 1e-12)]


# -- energy identities -----------------------------------------------------------

def _dense_quadratic(state: ModeState, grid: ChannelGrid) -> float:
    """``<A U, U>`` summed over the x harmonics of ``state`` using the dense operators."""
    Nx = grid.disc.Nx
    hats = [np.fft.rfft(a, axis=0) for a in state.components()]
    total = 0.0
    for m in range(Nx // 2 + 1):
        op = dense.assemble_dense(state.n, m, grid.cfg, grid.disc, check=False)
        U = np.concatenate([h[m] for h in hats])
        weight = 1.0 if m in (0, Nx // 2) else 2.0
        total += weight * float(np.real(op.inner(op.matrix @ U, U)))
    return total * grid.dx / Nx


@_timed
def check_flux_identity(cfg: ChannelConfig | None = None, disc: Discretization | None = None,
                        samples: int = 100, seed: int = 1) -> Check:
    """``<A U, U>`` three ways on random wall-compliant states."""
    cfg = cfg or ChannelConfig(f=0.8, Nbuoy=1.7)
    disc = disc or Discretization(Nx=8, Ny=17, M=3)
    grid = ChannelGrid(cfg, disc)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(samples):
        n = 1 + i % disc.M
        st = random_bc_state(n, grid, rng, smooth=bool(i % 2))
        ctx = ModeOperatorContext.build(n, grid)
        tend = tendency_n(st, None, 0.0, ctx)
        via_tendency = -inner_product(tend.components(), st.components(), grid)
        via_flux = boundary_flux_n(st, ctx)["characteristic"]
        via_dense = _dense_quadratic(st, grid)
        scale = max(abs(via_tendency), abs(via_flux), abs(via_dense), 1e-300)
        rel = max(abs(via_tendency - via_flux), abs(via_dense - via_flux), abs(via_dense - via_tendency)) / scale
        worst = max(worst, rel)
    return Check("<AU,U> three-way agreement", worst <= 1e-10, worst, 1e-10, {"samples": samples})


@_timed
def check_barotropic_conservation(cfg: ChannelConfig | None = None, Nx: int = 16, Ny: int = 65,
                                  T: float = 1.0, dt: float = 1e-3, seed: int = 2) -> Check:
    cfg = cfg or ChannelConfig(f=1.0)
    grid = ChannelGrid(cfg, Discretization(Nx=Nx, Ny=Ny, M=1, dt=dt, Tend=T))
    rng = np.random.default_rng(seed)
    u, v, _ = project_barotropic(_random_smooth(grid, rng, 5), _random_smooth(grid, rng, 5), grid)
    st = BarotropicState(u, v)
    E0 = barotropic_energy(st, grid)
    worst = 0.0
    nsteps = steps_for(T, dt)
    for i in range(nsteps):
        st = step_barotropic(st, None, i * dt, dt, grid)
        worst = max(worst, abs(barotropic_energy(st, grid) - E0) / E0)
    walls = float(np.abs(st.v0[:, [0, -1]]).max())
    return Check("barotropic energy conservation", worst <= 1e-8, worst, 1e-8,
                 {"E0": E0, "steps": nsteps, "v0_walls": walls})


def contraction_run(cfg: ChannelConfig, disc: Discretization, variant: str, T: float = 1.0,
                    dt: float = 1e-3, every: int = 2, seed: int = 3, scheme: str = RK4_IF):
    """Unforced run of modes ``1..M`` from identical smooth data; returns the energy matrix."""
    grid = ChannelGrid(cfg, disc)
    rng = np.random.default_rng(seed)
    modes = [random_bc_state(n, grid, rng, smooth=True, variant=variant) for n in range(1, disc.M + 1)]
    stack = ModalStack(BarotropicState.zeros(grid.shape), modes)
    stepper = Stepper(grid, None, IntegratorConfig(scheme=scheme), bc_variant=variant)
    traj = Trajectory(grid, bc_variant=variant)
    traj.append(stack)
    nsteps = steps_for(T, dt)
    for i in range(nsteps):
        stack = stepper.step(stack, dt)
        if (i + 1) % every == 0:
            traj.append(stack)
    return traj, energy_matrix(energy_audit(traj))


@_timed
def check_contraction(cfg: ChannelConfig | None = None, disc: Discretization | None = None,
                      T: float = 1.0, dt: float = 1e-3, every: int = 2) -> list[Check]:
    """Standard walls: every mode energy non-increasing; swapped: non-decreasing."""
    cfg = cfg or ChannelConfig(f=0.5)
    disc = disc or Discretization(Nx=16, Ny=33, M=4)
    out = []
    for variant, increasing in ((STANDARD, False), (SWAPPED, True)):
        traj, E = contraction_run(cfg, disc, variant, T, dt, every)
        E = E[:, 1:]
        worst = 0.0
        ok = True
        for n in range(E.shape[1]):
            slack = 1e-12 * E[0, n]
            d = np.diff(E[:, n])
            bad = (-d if increasing else d) / E[0, n]
            worst = max(worst, float(bad.max()))
            ok &= monotone(E[:, n], slack, increasing)
        name = f"mode energy {'non-decreasing (swapped)' if increasing else 'non-increasing (standard)'}"
        detail = {"E0": E[0].tolist(), "E_end": E[-1].tolist(), "output_every_steps": every}
        if not increasing:
            detail["kappa"] = kappa_estimate(energy_audit(traj))[1:].tolist()
            detail["derivative_bound_ratio"] = derivative_bound_ratio(traj).tolist()
        out.append(Check(name, ok, worst, 1e-12, detail))
    return out


@_timed
def check_modal_decoupling(cfg: ChannelConfig | None = None, disc: Discretization | None = None,
                           mode: int = 2, T: float = 1.0, dt: float = 1e-3, seed: int = 4) -> Check:
    cfg = cfg or ChannelConfig(f=0.7)
    disc = disc or Discretization(Nx=16, Ny=33, M=4)
    grid = ChannelGrid(cfg, disc)
    rng = np.random.default_rng(seed)
    stack = ModalStack.zeros(disc.M, grid.shape)
    stack.modes[mode - 1] = random_bc_state(mode, grid, rng)
    E0 = mode_energy(stack.modes[mode - 1], grid)
    stepper = Stepper(grid, None, IntegratorConfig())
    worst = 0.0
    for _ in range(steps_for(T, dt)):
        stack = stepper.step(stack, dt)
        others = [mode_energy(m, grid) for m in stack.modes if m.n != mode]
        others.append(barotropic_energy(stack.barotropic, grid))
        worst = max(worst, max(others) / E0)
    return Check("modal decoupling leak", worst <= 1e-12, worst, 1e-12, {"mode": mode})


# -- adjoint ------------------------------------------------------------------------

@_timed
def check_adjoint(cfg: ChannelConfig | None = None, Ny_list=(17, 33, 65, 129),
                  modes=(1, 2, 3), ms=(0, 1, 2)) -> list[Check]:
    cfg = cfg or ChannelConfig(f=0.9, Nbuoy=1.4)
    skew = 0.0
    pairing = 0.0
    for n in modes:
        for m in ms:
            op = dense.assemble_dense(n, m, cfg, Discretization(Nx=8, Ny=Ny_list[1], M=n))
            rep = dense.adjoint_check(op)
            skew = max(skew, rep.coriolis_skew, rep.advection_skew)
            pairing = max(pairing, rep.pairing_defect, rep.subspace_pairing)
    checks = [Check("skew parts exactly skew", skew <= 1e-13, skew, 1e-13),
              Check("boundary pairing identity", pairing <= 1e-10, pairing, 1e-10)]

    sweep = dense.pairing_sweep(1, 1, cfg, Ny_list)
    order = min(sweep["orders"])
    checks.append(Check("boundary pairing defect order under dy-halving", order >= 1.0, order, 1.0,
                        {"dy": sweep["dy"], "defect": sweep["defect"], "orders": sweep["orders"]}))

    worst_order = math.inf
    worst_C = 0.0
    details = {}
    for n in modes:
        ps = dense.positivity_sweep(n, 1, cfg, Ny_list, SWAPPED, adjoint=True)
        worst_order = min(worst_order, min(ps["orders"]))
        worst_C = max(worst_C, ps["C"])
        lam, N = cfg.lam(n), cfg.Nbuoy
        # wall constant from integrating the adjoint by parts, next to the N^2/(4 lam) variant
        details[f"n={n}"] = {"violation": ps["violation"], "orders": ps["orders"], "C": ps["C"],
                             "wall_constant": N / lam, "wall_constant_alt": N**2 / (4 * lam)}
    checks.append(Check("adjoint positivity violation order", worst_order >= 1.0, worst_order, 1.0,
                        {"C": worst_C, **details}))

    fwd = max(dense.positivity_check(dense.assemble_dense(n, 1, cfg, Discretization(Nx=8, Ny=33, M=n),
                                                          check=False)).violation for n in modes)
    checks.append(Check("forward positivity on standard subspace", fwd <= 1e-12, fwd, 1e-12))
    neg = max(dense.positivity_check(dense.assemble_dense(n, 1, cfg, Discretization(Nx=8, Ny=33, M=n),
                                                          check=False), SWAPPED).min_eig for n in modes)
    checks.append(Check("swapped subspace has an energy-growth direction", neg < 0, neg, 0.0))
    return checks


# -- oracle ---------------------------------------------------------------------------

@_timed
def check_oracle(cfg: ChannelConfig | None = None, Ny: int = 33, Nx: int = 8, dt: float = 1e-3,
                 T: float = 0.5, modes=(1, 2, 3), ms=(0, 1, -1, 2, -2), scheme: str = RK4_IF,
                 seed: int = 5) -> Check:
    """Time stepper against ``expm`` of the projected dense operator, per (n, k)."""
    cfg = cfg or ChannelConfig(f=0.6)
    disc = Discretization(Nx=Nx, Ny=Ny, M=max(modes), dt=dt, Tend=T)
    grid = ChannelGrid(cfg, disc)
    stepper = Stepper(grid, None, IntegratorConfig(scheme=scheme))
    rng = np.random.default_rng(seed)
    nsteps = steps_for(T, dt)
    worst = 0.0
    norm_growth = 0.0
    table = {}
    for n in modes:
        for m in ms:
            op = dense.assemble_dense(n, m, cfg, disc)
            U0 = rng.standard_normal(3 * Ny) + (1j * rng.standard_normal(3 * Ny) if m else 0.0)
            U0 = op.bc_projector() @ U0
            ref = dense.oracle_evolve(op, U0, T)
            norm_growth = max(norm_growth, dense.energy_norm(op, ref) / dense.energy_norm(op, U0) - 1.0)
            st = dense.harmonic_state(op, U0, grid)
            t = 0.0
            for i in range(nsteps):
                st = stepper.step_mode(st, t, dt)
                t = (i + 1) * dt
            got = dense.harmonic_coeffs(op, st, grid)
            err = dense.energy_norm(op, got - ref) / dense.energy_norm(op, ref)
            table[f"n={n},m={m}"] = err
            worst = max(worst, err)
    return Check("stepper vs matrix exponential", worst <= 1e-6, worst, 1e-6,
                 {"errors": table, "oracle_norm_growth": norm_growth})


# -- manufactured solutions -------------------------------------------------------------

@_timed
def check_mms(cfg: ChannelConfig | None = None, Ny: int = 33, Nx: int = 8, T: float = 0.5) -> list[Check]:
    cfg = cfg or ChannelConfig(f=0.5)
    table = mms_run(smoke_solution(cfg), cfg, n=1, Ny=Ny, Nx=Nx, T=T)
    yo, to = table.orders("y"), table.orders("t")
    xe = max(table.errors("x"))
    rows = {"rows": table.rows}
    return [Check("MMS y order", all(1.8 <= o <= 2.2 for o in yo), min(yo), 1.8, rows),
            Check("MMS t order", all(3.6 <= o <= 4.4 for o in to), min(to), 3.6),
            Check("MMS x error", xe <= 1e-8, xe, 1e-8)]


@_timed
def check_regularity(cfg: ChannelConfig | None = None, Ny: int = 33, Nx: int = 8, T: float = 1.0,
                     dt: float = 2e-3, every: int = 5) -> Check:
    cfg = cfg or ChannelConfig(f=0.5)
    exact = smoke_solution(cfg)
    disc = Discretization(Nx=Nx, Ny=Ny, M=1, dt=dt, Tend=T)
    grid = ChannelGrid(cfg, disc)
    traj = Trajectory(grid)
    s0 = exact.sample(grid, 0.0)
    traj.append(ModalStack(BarotropicState.zeros(grid.shape), [ModeState(1, s0.u, s0.v, s0.psi)], 0.0))
    count = [0]

    def keep(t, state, g):
        count[0] += 1
        if count[0] % every == 0:
            traj.append(ModalStack(BarotropicState.zeros(g.shape), [state], t))

    solve_mode(exact, cfg, disc, 1, T, dt, callback=keep)
    growth = growth_factors(regularity_probe(traj))
    worst = max(growth.values())
    return Check("regularity norms bounded", worst <= 10.0, worst, 10.0, {"growth": growth})


@_timed
def check_stationary_A0(cfg: ChannelConfig | None = None, Nx: int = 16, Ny: int = 33) -> list[Check]:
    """Invert the stationary barotropic operator on a compliant field."""
    cfg = cfg or ChannelConfig(U0bar=1.3)
    grid = ChannelGrid(cfg, Discretization(Nx=Nx, Ny=Ny, M=1))
    X, Y = grid.mesh()
    L1, L2 = cfg.L1, cfg.L2
    sigma = (np.sin(np.pi * Y / L2) ** 2 * np.cos(2 * np.pi * X / L1)
             + 0.4 * np.sin(2 * np.pi * Y / L2) * np.sin(4 * np.pi * X / L1 + 0.3))
    sigma[:, [0, -1]] = 0.0
    u, v = -ddy(sigma, grid), ddx(sigma, grid)
    F1, F2 = apply_A0(u, v, grid)
    res = solve_stationary_A0(F1, F2, grid)
    trip = max(np.abs(res.u0 - u).max(), np.abs(res.v0 - v).max()) / np.abs(u).max()
    return [Check("stationary barotropic residual", res.residual <= 1e-8, res.residual, 1e-8,
                  {"round_trip": float(trip), "solvability_defect": res.solvability_defect}),
            Check("stationary barotropic pressure", res.pressure_norm <= 1e-8, res.pressure_norm, 1e-8)]


def run_verify(suite: str, cfg: ChannelConfig | None = None) -> VerifyReport:
    """Run one named suite (or ``"all"``)."""
    if suite == "all":
        report = VerifyReport("all")
        for name in SUITES:
            report.checks.extend(run_verify(name, cfg).checks)
        return report
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    report = VerifyReport(suite)
    add = report.checks.extend
    if suite == "transforms":
        add([check_vertical_basis()])
        add(check_sbp())
    elif suite == "adjoint":
        add(check_adjoint(cfg))
    elif suite == "energy":
        add([check_flux_identity(cfg, samples=20)])
        add([check_barotropic_conservation(cfg, Ny=33, T=0.2)])
        add(check_contraction(cfg, Discretization(Nx=8, Ny=17, M=2), T=0.2))
        add([check_stationary_A0(None)[0]])
    elif suite == "oracle":
        add([check_oracle(cfg)])
    elif suite == "mms":
        add(check_mms(cfg))
    return report
