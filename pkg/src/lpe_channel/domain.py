"""Assembly of 3D fields from the modal stack, and projection of initial data."""

from __future__ import annotations

import numpy as np

from .config import ChannelConfig, Discretization
from .horizontal import ChannelGrid, ddx, ddy, inner_product
from .mode_n import STANDARD, enforce_characteristic_bc
from .mode_zero import project_barotropic
from .state import InitialCondition, ModalStack, ModeState, PhysicalState
from .vertical import VerticalBasis

#: relative adjustment above which project_to_domain emits a warning
ADJUST_WARN = 0.10


def derived_fields(mode: ModeState, grid: ChannelGrid) -> tuple[np.ndarray, np.ndarray]:
    """Pressure ``phi_n = -psi_n/lambda_n`` and vertical velocity ``w_n = -(u_nx + v_ny)/lambda_n``."""
    lam = grid.cfg.lam(mode.n)
    phi = -mode.psi / lam
    w = -(ddx(mode.u, grid) + ddy(mode.v, grid)) / lam
    return phi, w


def reconstruct_physical(stack: ModalStack, cfg: ChannelConfig, disc: Discretization,
                         grid: ChannelGrid | None = None) -> PhysicalState:
    """Sum the modal series on the z quadrature nodes.

    ``u, v, phi`` use the ``U_n`` family and ``w, psi`` the ``W_n`` family.
    The barotropic pressure is taken from the cached ``phi0`` when present.
    """
    grid = grid or ChannelGrid(cfg, disc)
    basis = VerticalBasis(cfg.L3, stack.M, disc.Nz_quad)
    Ut, Wt = basis.U_table(), basis.W_table()
    bt = stack.barotropic
    phi0 = bt.phi0 if bt.phi0 is not None else np.zeros(grid.shape)

    un = np.stack([bt.u0] + [m.u for m in stack.modes])
    vn = np.stack([bt.v0] + [m.v for m in stack.modes])
    derived = [derived_fields(m, grid) for m in stack.modes]
    phin = np.stack([phi0] + [d[0] for d in derived])
    wn = np.stack([d[1] for d in derived])
    pn = np.stack([m.psi for m in stack.modes])

    def synth(coeffs, table):
        return np.einsum("nxy,nq->xyq", coeffs, table)

    return PhysicalState(synth(un, Ut), synth(vn, Ut), synth(wn, Wt), synth(pn, Wt),
                         synth(phin, Ut), z=basis.z)


def project_to_domain(ic: InitialCondition, grid: ChannelGrid,
                      variant: str = STANDARD) -> InitialCondition:
    """Adjust raw initial data so every mode satisfies its wall conditions.

    Baroclinic modes get characteristic injection on the wall rows; the
    barotropic mode is replaced by its energy-orthogonal divergence-free
    projection (x-mean of ``u0`` kept, ``v0 = 0`` on the walls).  Relative
    adjustments in the energy norm are returned in ``residuals``; anything
    over 10% is reported in ``warnings`` but never rejected.
    """
    N = grid.cfg.Nbuoy
    fields: dict[int, tuple[np.ndarray, ...]] = {}
    residuals: dict[int, float] = {}
    warnings = list(ic.warnings)
    for n in sorted(ic.fields):
        comps = tuple(np.asarray(a, dtype=float) for a in ic.fields[n])
        if n == 0:
            u, v, rel = project_barotropic(comps[0], comps[1], grid)
            fields[0] = (u, v)
        else:
            raw = ModeState(n, *(a.copy() for a in comps))
            fixed = enforce_characteristic_bc(raw, N, variant, inplace=True)
            fields[n] = fixed.components()
            diff = [a - b for a, b in zip(fixed.components(), comps)]
            before = inner_product(comps, comps, grid)
            change = inner_product(diff, diff, grid)
            rel = float(np.sqrt(change / before)) if before > 0 else float(np.sqrt(change))
        residuals[n] = rel
        if rel > ADJUST_WARN:
            warnings.append(f"mode {n}: projection changed the data by {100 * rel:.1f}% (energy norm)")
    return ic.with_fields(fields, residuals=residuals, warnings=warnings)


def stack_from_initial(ic: InitialCondition, M: int, shape: tuple[int, int]) -> ModalStack:
    """Build a stack from per-mode fields; missing modes are zero."""
    stack = ModalStack.zeros(M, shape)
    if 0 in ic.fields:
        u, v = ic.fields[0][:2]
        stack.barotropic.u0, stack.barotropic.v0 = np.array(u, float), np.array(v, float)
    for n, comps in ic.fields.items():
        if 1 <= n <= M:
            stack.modes[n - 1] = ModeState(n, *(np.array(a, float) for a in comps[:3]))
    return stack
