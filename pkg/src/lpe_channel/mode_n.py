"""Dynamics of the baroclinic modes ``n >= 1``.

Each mode obeys a two-dimensional hyperbolic system in ``(u, v, psi)`` with
wave speed ``c_n = N / lambda_n``.  Wall conditions are imposed on the
incoming characteristic at each wall: ``chi = v - psi/N`` vanishes at
``y = 0`` and ``zeta = v + psi/N`` at ``y = L2``.  ``u`` carries no wall
condition because its equation has no y derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import ChannelConfig
from .horizontal import ChannelGrid
from .state import CharacteristicPair, ModeState

STANDARD = "standard"
SWAPPED = "swapped"
BC_VARIANTS = (STANDARD, SWAPPED)


@dataclass(frozen=True)
class ModeOperatorContext:
    n: int
    lam: float
    c: float
    cfg: ChannelConfig
    grid: ChannelGrid

    @classmethod
    def build(cls, n: int, grid: ChannelGrid) -> "ModeOperatorContext":
        cfg = grid.cfg
        return cls(n, cfg.lam(n), cfg.wave_speed(n), cfg, grid)


def tendency_n(state: ModeState, forcing, t: float, ctx: ModeOperatorContext,
               advect: bool = True) -> ModeState:
    """Right-hand side ``-A_n U + F`` of mode ``n``.

    ``forcing`` is None or a triple of arrays already evaluated at ``t``.
    With ``advect=False`` the ``U0bar d/dx`` terms are omitted (they are then
    handled exactly by an integrating factor).
    """
    cfg, grid = ctx.cfg, ctx.grid
    derivs = grid.xs.ddx_many(np.stack([state.u, state.v, state.psi]))
    ux, vx, psix = (np.ascontiguousarray(a) for a in derivs)
    du, dv, dpsi = (np.empty(grid.shape) for _ in range(3))
    fu = fv = fp = None
    if forcing is not None:
        fu, fv, fp = forcing
    kernels.mode_tendency(
        np.ascontiguousarray(state.u), np.ascontiguousarray(state.v),
        np.ascontiguousarray(state.psi), ux, vx, psix, fu, fv, fp,
        cfg.U0bar if advect else 0.0, cfg.f, 1.0 / ctx.lam, cfg.Nbuoy**2 / ctx.lam,
        grid.dy, du, dv, dpsi,
    )
    return ModeState(state.n, du, dv, dpsi)


def characteristics(state: ModeState, j: int, nbuoy: float) -> CharacteristicPair:
    v, psi = state.v[:, j], state.psi[:, j]
    return CharacteristicPair(v + psi / nbuoy, v - psi / nbuoy)


def enforce_characteristic_bc(state: ModeState, nbuoy: float, variant: str = STANDARD,
                              inplace: bool = False) -> ModeState:
    """Project the wall rows onto the boundary-condition subspace.

    ``standard`` zeroes ``chi`` at ``y = 0`` and ``zeta`` at ``y = L2`` while
    keeping the outgoing characteristic; ``swapped`` zeroes the outgoing one
    instead.  In the energy norm this is an orthogonal projection.
    """
    if variant not in BC_VARIANTS:
        raise ValueError(f"unknown bc variant {variant!r}")
    out = state if inplace else state.copy()
    kernels.inject_characteristic(out.v, out.psi, nbuoy, variant == SWAPPED)
    return out


def boundary_flux_n(state: ModeState, ctx: ModeOperatorContext) -> dict[str, float]:
    """Instantaneous energy loss through the walls.

    Returns ``characteristic`` = ``(N/4 lambda) sum [zeta(y=0)^2 + chi(y=L2)^2] dx``,
    ``raw`` = ``(1/lambda) sum [v psi(y=0) - v psi(y=L2)] dx`` and their
    difference.  On the standard subspace the two agree; ``raw`` equals the
    discrete ``<A U, U>`` for any state.
    """
    N, lam, dx = ctx.cfg.Nbuoy, ctx.lam, ctx.grid.dx
    lo = characteristics(state, 0, N)
    hi = characteristics(state, -1, N)
    charac = N / (4.0 * lam) * float(np.sum(lo.zeta**2 + hi.chi**2)) * dx
    raw = float(np.sum(state.v[:, 0] * state.psi[:, 0] - state.v[:, -1] * state.psi[:, -1])) * dx / lam
    return {"characteristic": charac, "raw": raw, "difference": raw - charac}
