"""Manufactured solutions for a single baroclinic mode.

An exact solution ``U* = (u, v, psi)(x, y, t)`` is written as field
expressions; the forcing ``F = U*_t + A U*`` is obtained by symbolic
differentiation, so the discrete solution converges to ``U*`` at the design
order of the scheme.  The builder enforces the wall conditions by blending
the characteristic variables with fixed quintic polynomials in ``s = y/L2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import ChannelConfig, Discretization
from ..errors import ConfigError
from ..expr import Expr, Num, Var, compile_field, diff, parse_field_expression, to_text
from ..horizontal import ChannelGrid, inner_product
from ..mode_n import STANDARD, SWAPPED
from ..state import ForcingSpec, ModeState
from ..timestep import IntegratorConfig, Stepper, steps_for


class MMSComplianceError(ConfigError):
    """The proposed exact solution violates the wall conditions."""

    def __init__(self, residual: float):
        super().__init__(f"exact solution violates the wall conditions (residual {residual:.3e})")
        self.residual = residual


def blend_weights(cfg: ChannelConfig) -> tuple[Expr, Expr]:
    """``b0(s) = s^3 (10 - 15 s + 6 s^2)`` and ``b1 = 1 - b0`` with ``s = y/L2``.

    ``b0`` vanishes to second order at ``y = 0`` and equals one to second
    order at ``y = L2``.
    """
    s = Var("y") / Num(cfg.L2)
    s3 = s * s * s
    b0 = s3 * (Num(10.0) - Num(15.0) * s + Num(6.0) * s * s)
    return b0, Num(1.0) - b0


def blend_pair(zeta_hat: Expr, chi_hat: Expr, cfg: ChannelConfig, variant: str = STANDARD):
    """``(v, psi)`` whose characteristics are blended copies of ``zeta_hat``, ``chi_hat``.

    Standard: ``chi`` vanishes at ``y = 0`` and ``zeta`` at ``y = L2``;
    swapped: the reverse.
    """
    b0, b1 = blend_weights(cfg)
    if variant == STANDARD:
        zeta, chi = zeta_hat * b1, chi_hat * b0
    elif variant == SWAPPED:
        zeta, chi = zeta_hat * b0, chi_hat * b1
    else:
        raise ConfigError(f"unknown bc variant {variant!r}")
    N = Num(cfg.Nbuoy)
    return Num(0.5) * (zeta + chi), Num(0.5) * N * (zeta - chi)


@dataclass
class ExactSolution:
    u: Expr
    v: Expr
    psi: Expr
    label: str = "custom"

    def components(self) -> tuple[Expr, Expr, Expr]:
        return (self.u, self.v, self.psi)

    def sample(self, grid: ChannelGrid, t: float) -> ModeState:
        X, Y = grid.mesh()
        comps = [compile_field(e)(X, Y, t).copy() for e in self.components()]
        return ModeState(0, *comps)

    def describe(self) -> dict[str, str]:
        return {"u": to_text(self.u), "v": to_text(self.v), "psi": to_text(self.psi)}


def build_exact(u: str | Expr, v_hat: str | Expr, psi_hat: str | Expr, cfg: ChannelConfig,
                variant: str = STANDARD, label: str = "custom") -> ExactSolution:
    """Make any smooth ``(v_hat, psi_hat)`` wall-compliant; ``u`` is used as given."""
    P = lambda e: parse_field_expression(e) if isinstance(e, str) else e  # noqa: E731
    vh, ph = P(v_hat), P(psi_hat)
    N = Num(cfg.Nbuoy)
    v, psi = blend_pair(vh + ph / N, vh - ph / N, cfg, variant)
    return ExactSolution(P(u), v, psi, label)


def smoke_solution(cfg: ChannelConfig) -> ExactSolution:
    """The fixed smooth test solution used by the convergence study."""
    w = f"2*pi()*x/{cfg.L1!r}"
    return build_exact(f"cos({w} - t) * (1 + 0.5*y)",
                       f"sin({w} + 0.5*t) * cos(y) + 0.3*cos(t)",
                       f"cos({w} - 0.7*t) * exp(-y) + 0.2*sin(2*t)*y",
                       cfg, STANDARD, label="smoke")


def polynomial_in_time_solution(cfg: ChannelConfig, a: float = 0.7, b: float = -1.3) -> ExactSolution:
    """``u = a + b t``, ``v = psi = 0``: exact for any RK4 step."""
    return ExactSolution(Num(a) + Num(b) * Var("t"), Num(0.0), Num(0.0), label="linear-in-t")


def mms_forcing(exact: ExactSolution, cfg: ChannelConfig, n: int) -> tuple[Expr, Expr, Expr]:
    """``F = U_t + A_n U`` for mode ``n``."""
    lam = cfg.lam(n)
    U0, f, N = Num(cfg.U0bar), Num(cfg.f), cfg.Nbuoy
    u, v, p = exact.components()
    d = diff
    Fu = d(u, "t") + U0 * d(u, "x") - f * v - d(p, "x") / Num(lam)
    Fv = d(v, "t") + U0 * d(v, "x") + f * u - d(p, "y") / Num(lam)
    Fp = d(p, "t") + U0 * d(p, "x") - Num(N**2 / lam) * (d(u, "x") + d(v, "y"))
    return Fu, Fv, Fp


def compliance_residual(exact: ExactSolution, cfg: ChannelConfig, variant: str = STANDARD,
                        samples: int = 17) -> float:
    """Largest wall-condition violation of the exact solution on sample points."""
    x = np.linspace(0.0, cfg.L1, samples)
    ts = np.linspace(0.0, 2.0, samples)
    X, T = np.meshgrid(x, ts, indexing="ij")
    N = cfg.Nbuoy
    worst = 0.0
    for y, sign in ((0.0, -1.0), (cfg.L2, +1.0)):
        if variant == SWAPPED:
            sign = -sign
        v = np.asarray(exact.v(X, y, T)) * np.ones_like(X)
        p = np.asarray(exact.psi(X, y, T)) * np.ones_like(X)
        worst = max(worst, float(np.max(np.abs(v + sign * p / N))))
    return worst


def forcing_spec(exact: ExactSolution, cfg: ChannelConfig, n: int) -> ForcingSpec:
    return ForcingSpec({n: tuple(compile_field(e, n) for e in mms_forcing(exact, cfg, n))})


def _rel_error(a: ModeState, b: ModeState, grid: ChannelGrid) -> float:
    diffs = [x - y for x, y in zip(a.components(), b.components())]
    num = inner_product(diffs, diffs, grid)
    den = inner_product(b.components(), b.components(), grid)
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))


def solve_mode(exact: ExactSolution, cfg: ChannelConfig, disc: Discretization, n: int,
               T: float, dt: float, scheme: str = "rk4-integrating-factor",
               variant: str = STANDARD, callback=None) -> tuple[ModeState, ChannelGrid]:
    """Integrate mode ``n`` from the exact initial state with the manufactured forcing."""
    res = compliance_residual(exact, cfg, variant)
    if res > 1e-12:
        raise MMSComplianceError(res)
    grid = ChannelGrid(cfg, disc)
    stepper = Stepper(grid, forcing_spec(exact, cfg, n), IntegratorConfig(scheme=scheme),
                      bc_variant=variant)
    s0 = exact.sample(grid, 0.0)
    state = ModeState(n, s0.u, s0.v, s0.psi)
    nsteps = steps_for(T, dt)
    t = 0.0
    for i in range(nsteps):
        state = stepper.step_mode(state, t, dt)
        t = (i + 1) * dt
        if callback is not None:
            callback(t, state, grid)
    return state, grid


@dataclass
class ConvergenceTable:
    label: str
    rows: list[dict] = field(default_factory=list)

    def add(self, kind: str, h: float, error: float, order: float | None):
        self.rows.append({"kind": kind, "h": h, "error": error,
                          "order": float("nan") if order is None else order})

    def orders(self, kind: str) -> list[float]:
        return [r["order"] for r in self.rows if r["kind"] == kind and np.isfinite(r["order"])]

    def errors(self, kind: str) -> list[float]:
        return [r["error"] for r in self.rows if r["kind"] == kind]


def mms_run(exact: ExactSolution, cfg: ChannelConfig, n: int = 1, Ny: int = 33, Nx: int = 8,
            T: float = 0.5, dt_space: float = 2e-3, dt_time: float = 0.025, t_levels: int = 3,
            scheme: str = "rk4-integrating-factor") -> ConvergenceTable:
    """Observed orders in y, x and t.

    y: grids ``Ny, 2Ny-1, 4Ny-3`` at a time step small enough that time
    error is negligible, errors against the exact solution.
    x: difference between ``Nx`` and ``2Nx`` at fixed ``Ny`` (spectral, so
    it vanishes once the solution is resolved).
    t: self-convergence at fixed ``Ny`` against a run with ``dt/32``.
    """
    table = ConvergenceTable(exact.label)

    # y
    prev = None
    for Nyk in (Ny, 2 * Ny - 1, 4 * Ny - 3):
        disc = Discretization(Nx=Nx, Ny=Nyk, M=n, dt=dt_space, Tend=T)
        state, grid = solve_mode(exact, cfg, disc, n, T, dt_space, scheme)
        err = _rel_error(state, exact.sample(grid, T), grid)
        h = cfg.L2 / (Nyk - 1)
        order = None if prev is None else float(np.log(prev[1] / err) / np.log(prev[0] / h))
        table.add("y", h, err, order)
        prev = (h, err)

    # x
    disc_a = Discretization(Nx=Nx, Ny=Ny, M=n, dt=dt_space, Tend=T)
    disc_b = Discretization(Nx=2 * Nx, Ny=Ny, M=n, dt=dt_space, Tend=T)
    sa, ga = solve_mode(exact, cfg, disc_a, n, T, dt_space, scheme)
    sb, gb = solve_mode(exact, cfg, disc_b, n, T, dt_space, scheme)
    sb_on_a = ModeState(n, *(a[::2] for a in sb.components()))
    table.add("x", cfg.L1 / Nx, _rel_error(sa, sb_on_a, ga), None)

    # t
    disc = Discretization(Nx=Nx, Ny=Ny, M=n, dt=dt_time, Tend=T)
    ref, grid = solve_mode(exact, cfg, disc, n, T, dt_time / 32, scheme)
    prev = None
    for level in range(t_levels):
        dt = dt_time / 2**level
        state, _ = solve_mode(exact, cfg, disc, n, T, dt, scheme)
        err = _rel_error(state, ref, grid)
        order = None if prev is None else float(np.log(prev[1] / err) / np.log(prev[0] / dt))
        table.add("t", dt, err, order)
        prev = (dt, err)
    return table
