"""Barotropic (depth-independent) mode.

The barotropic flow is two-dimensional, incompressible, rotating and
advected by ``U0bar``.  It is advanced through its vorticity: the curl
removes both pressure and the (constant-f) Coriolis force, so vorticity is
transported exactly along x.  Velocity is recovered from the streamfunction
``sigma`` (zero on both walls) as ``u = -sigma_y``, ``v = sigma_x``; the
x-mean flow decouples (``vbar = 0``, ``ubar_t = mean_x F_u``) and is
integrated separately.

Every derivative here is the same discrete ``ddx``/SBP ``ddy`` pair used by
the baroclinic modes, and the streamfunction solve uses the Laplacian that
is consistent with them, so the velocity-to-vorticity-to-velocity map is the
energy-orthogonal projection onto discretely divergence-free fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .horizontal import (ChannelGrid, advect_x_exact, ddx, ddy, inner_product,
                         poisson_dirichlet, poisson_neumann)
from .state import BarotropicState


def curl(u0: np.ndarray, v0: np.ndarray, grid: ChannelGrid) -> np.ndarray:
    """Vorticity ``v0_x - u0_y``."""
    return ddx(v0, grid) - ddy(u0, grid)


def _xmean(a: np.ndarray) -> np.ndarray:
    return a.mean(axis=0)


def velocity_from_vorticity(omega: np.ndarray, ubar: np.ndarray, grid: ChannelGrid):
    """Streamfunction and velocity for a fluctuating vorticity plus mean flow ``ubar(y)``."""
    sigma = poisson_dirichlet(omega - _xmean(omega)[None, :], grid, stencil="sbp")
    u = -ddy(sigma, grid)
    u += (ubar - _xmean(u))[None, :]
    v = ddx(sigma, grid)
    return u, v, sigma


def project_barotropic(u0: np.ndarray, v0: np.ndarray, grid: ChannelGrid):
    """Energy-orthogonal projection onto discretely divergence-free fields.

    Returns ``(u, v, relative_change)`` where the change is measured in the
    energy norm.  The x-mean of ``u`` is kept and the x-mean of ``v`` is
    removed (it must vanish for a divergence-free field with ``v = 0`` on
    the walls).
    """
    u, v, _ = velocity_from_vorticity(curl(u0, v0, grid), _xmean(u0), grid)
    before = inner_product((u0, v0), (u0, v0), grid)
    change = inner_product((u - u0, v - v0), (u - u0, v - v0), grid)
    rel = np.sqrt(change / before) if before > 0 else np.sqrt(change)
    return u, v, float(rel)


def divergence(u0: np.ndarray, v0: np.ndarray, grid: ChannelGrid) -> np.ndarray:
    return ddx(u0, grid) + ddy(v0, grid)


def energy(state: BarotropicState, grid: ChannelGrid) -> float:
    return 0.5 * inner_product(state.components(), state.components(), grid)


def step_barotropic(state: BarotropicState, forcing, t: float, dt: float,
                    grid: ChannelGrid) -> BarotropicState:
    """Advance the barotropic mode from ``t`` to ``t + dt``.

    ``forcing`` is None or a callable ``s -> (F_u, F_v)`` returning arrays.
    Forcing enters through Simpson's rule on ``(t, t+dt/2, t+dt)``.
    """
    U0 = grid.cfg.U0bar
    omega = curl(state.u0, state.v0, grid)
    ubar = _xmean(state.u0)
    if forcing is None:
        omega = advect_x_exact(omega, U0, dt, grid)
    else:
        samples = [forcing(t + s) for s in (0.0, 0.5 * dt, dt)]
        curls = [curl(fu, fv, grid) for fu, fv in samples]
        omega = advect_x_exact(omega, U0, dt, grid, source=curls)
        fbar = [_xmean(fu) for fu, _ in samples]
        ubar = ubar + dt / 6.0 * (fbar[0] + 4.0 * fbar[1] + fbar[2])
    u, v, sigma = velocity_from_vorticity(omega, ubar, grid)
    return BarotropicState(u, v, omega=curl(u, v, grid), sigma=sigma)


def recover_pressure(state: BarotropicState, forcing, grid: ChannelGrid) -> np.ndarray:
    """Diagnostic pressure ``phi0`` (zero mean).

    Solves ``Lap phi0 = div F + f omega`` with ``phi0_y = F_v - f u0`` on the
    walls.  ``forcing`` is None or a pair of arrays ``(F_u, F_v)``.
    """
    f = grid.cfg.f
    if forcing is None:
        fu = fv = np.zeros(grid.shape)
    else:
        fu, fv = forcing
    omega = curl(state.u0, state.v0, grid)
    rhs = ddx(fu, grid) + ddy(fv, grid) + f * omega
    flux_lo = fv[:, 0] - f * state.u0[:, 0]
    flux_hi = fv[:, -1] - f * state.u0[:, -1]
    return poisson_neumann(rhs, flux_lo, flux_hi, grid)


@dataclass
class StationaryResult:
    u0: np.ndarray
    v0: np.ndarray
    phi: np.ndarray
    residual: float
    pressure_norm: float
    solvability_defect: float
    kernel_note: str


def apply_A0(u0: np.ndarray, v0: np.ndarray, grid: ChannelGrid):
    """Stationary barotropic operator ``(-U0 u_x + phi_x, -U0 v_x + phi_y)``.

    For a discretely divergence-free field with ``v0 = 0`` on the walls,
    ``ddx`` of it stays in that class, so the pressure part vanishes.
    """
    U0 = grid.cfg.U0bar
    return -U0 * ddx(u0, grid), -U0 * ddx(v0, grid)


def solve_stationary_A0(F1: np.ndarray, F2: np.ndarray, grid: ChannelGrid) -> StationaryResult:
    """Invert the stationary operator through the elliptic problem for ``v``.

    ``-U0 Lap v = F2_x - F1_y`` with ``v = 0`` on the walls, then
    ``u_x = -v_y`` per wavenumber.  The x-mean of ``u`` lies in the kernel
    and is set to zero; the x-mean of ``F1`` must vanish for solvability.
    """
    U0 = grid.cfg.U0bar
    xs = grid.xs
    v = poisson_dirichlet(-curl(F1, F2, grid) / U0, grid, stencil="sbp")
    vy_hat = xs.forward(ddy(v, grid))
    u_hat = np.zeros_like(vy_hat)
    kd = xs.k_deriv
    nz = kd != 0
    u_hat[nz] = -vy_hat[nz] / (1j * kd[nz, None])
    u = xs.inverse(u_hat)

    # pressure from the x-momentum balance (fluctuations) and the y-momentum
    # balance (x-mean); both should vanish on the divergence-free class
    F1_hat = xs.forward(F1)
    phi_hat = np.zeros_like(F1_hat)
    phi_hat[nz] = (F1_hat[nz] + 1j * kd[nz, None] * U0 * u_hat[nz]) / (1j * kd[nz, None])
    f2bar = _xmean(F2)
    w = grid.yop.weights
    phibar = np.concatenate([[0.0], np.cumsum(0.5 * (f2bar[1:] + f2bar[:-1]) * grid.dy)])
    phibar -= np.sum(phibar * w) / grid.cfg.L2
    phi_hat[0] = phibar * grid.disc.Nx
    phi = xs.inverse(phi_hat)

    a1, a2 = apply_A0(u, v, grid)
    r1 = a1 + ddx(phi, grid) - F1
    r2 = a2 + ddy(phi, grid) - F2
    fnorm = np.sqrt(inner_product((F1, F2), (F1, F2), grid))
    rnorm = np.sqrt(inner_product((r1, r2), (r1, r2), grid))
    pnorm = float(np.sqrt(np.sum(phi**2 * grid.cell_weights)))
    defect = float(np.max(np.abs(_xmean(F1)))) + float(np.max(np.abs(F1_hat[-1]))) / grid.disc.Nx
    return StationaryResult(u, v, phi, rnorm / fnorm if fnorm > 0 else rnorm, pnorm, defect,
                            "x-mean of u0 lies in the kernel and is set to zero")


def transport_regularity_probe(state: BarotropicState, forcing, grid: ChannelGrid,
                               dt: float, nsteps: int, t0: float = 0.0) -> dict[str, float]:
    """Compare ``theta = u0_y`` transported along x against ``ddy(u0)`` of the main solve.

    ``theta_t + U0 theta_x = f v0_y - phi0_xy + F_u,y`` is integrated with
    exact advection and Simpson's rule for the source, the pressure coming
    from :func:`recover_pressure`.  Returns the largest discrepancy over the
    run, absolute and relative to ``max |u0_y|``.
    """
    f = grid.cfg.f
    U0 = grid.cfg.U0bar

    def forcing_at(s):
        return None if forcing is None else forcing(s)

    def source(st: BarotropicState, s: float) -> np.ndarray:
        F = forcing_at(s)
        phi = recover_pressure(st, F, grid)
        out = f * ddy(st.v0, grid) - ddx(ddy(phi, grid), grid)
        if F is not None:
            out = out + ddy(F[0], grid)
        return out

    theta = ddy(state.u0, grid)
    cur = state
    t = t0
    worst = 0.0
    scale = float(np.max(np.abs(theta)))
    for _ in range(nsteps):
        mid = step_barotropic(cur, forcing, t, 0.5 * dt, grid)
        nxt = step_barotropic(cur, forcing, t, dt, grid)
        samples = [source(cur, t), source(mid, t + 0.5 * dt), source(nxt, t + dt)]
        theta = advect_x_exact(theta, U0, dt, grid, source=samples)
        cur, t = nxt, t + dt
        ref = ddy(cur.u0, grid)
        worst = max(worst, float(np.max(np.abs(theta - ref))))
        scale = max(scale, float(np.max(np.abs(ref))))
    return {"max_discrepancy": worst, "relative": worst / scale if scale > 0 else worst}
