"""Energy budgets of stored trajectories.

Per mode the budget is ``dE/dt + flux - power = 0`` with ``E = <U, U>/2``,
``flux`` the wall term of ``<A U, U>`` and ``power = <F, U>``.  The time
derivative is taken from the stored series by centered differences, so the
residual measures both the scheme's energy behaviour and the differencing
error of the output cadence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from ..horizontal import ChannelGrid, inner_product
from ..mode_n import ModeOperatorContext, boundary_flux_n
from ..mode_zero import energy as barotropic_energy
from ..state import ForcingSpec, ModalStack


@dataclass
class Trajectory:
    """Stacks stored at output times, plus what is needed to audit them."""

    grid: ChannelGrid
    times: list[float] = field(default_factory=list)
    stacks: list[ModalStack] = field(default_factory=list)
    forcing: ForcingSpec | None = None
    bc_variant: str = "standard"

    def append(self, stack: ModalStack) -> None:
        self.times.append(stack.time)
        self.stacks.append(stack.copy())

    @property
    def M(self) -> int:
        return self.stacks[0].M if self.stacks else 0


@dataclass
class EnergyReport:
    t: float
    E: np.ndarray          # index 0 is the barotropic mode
    flux: np.ndarray
    power: np.ndarray
    residual: np.ndarray

    def rows(self):
        for n in range(self.E.size):
            yield (self.t, n, float(self.E[n]), float(self.flux[n]), float(self.power[n]),
                   float(self.residual[n]))


def instantaneous(stack: ModalStack, grid: ChannelGrid, forcing: ForcingSpec | None = None):
    """``(E, flux, power)`` arrays over modes ``0..M`` at one instant."""
    M = stack.M
    E = np.zeros(M + 1)
    flux = np.zeros(M + 1)
    power = np.zeros(M + 1)
    bt = stack.barotropic
    E[0] = barotropic_energy(bt, grid)
    # v0 vanishes on the walls, so no energy crosses them in mode 0
    X = Y = None
    if forcing is not None:
        X, Y = grid.mesh()
        F0 = forcing.evaluate(0, X, Y, stack.time)
        if F0 is not None:
            power[0] = inner_product(F0[:2], bt.components(), grid)
    for mode in stack.modes:
        n = mode.n
        U = mode.components()
        E[n] = 0.5 * inner_product(U, U, grid)
        # the raw form equals <A U, U> for any state; on the standard
        # subspace it coincides with the characteristic form
        flux[n] = boundary_flux_n(mode, ModeOperatorContext.build(n, grid))["raw"]
        if forcing is not None:
            Fn = forcing.evaluate(n, X, Y, stack.time)
            if Fn is not None:
                power[n] = inner_product(Fn, U, grid)
    return E, flux, power


def budget_residual(t: np.ndarray, E: np.ndarray, flux: np.ndarray, power: np.ndarray) -> np.ndarray:
    """``dE/dt + flux - power`` along axis 0 (second-order differences, one-sided at the ends)."""
    if len(t) < 3:
        return np.zeros_like(E)
    dE = np.gradient(E, np.asarray(t), axis=0, edge_order=2)
    return dE + flux - power


def energy_audit(traj: Trajectory) -> list[EnergyReport]:
    if not traj.stacks:
        return []
    parts = [instantaneous(s, traj.grid, traj.forcing) for s in traj.stacks]
    E = np.array([p[0] for p in parts])
    flux = np.array([p[1] for p in parts])
    power = np.array([p[2] for p in parts])
    res = budget_residual(np.array(traj.times), E, flux, power)
    return [EnergyReport(t, E[i], flux[i], power[i], res[i]) for i, t in enumerate(traj.times)]


def energy_matrix(reports: list[EnergyReport]) -> np.ndarray:
    """``E`` as an array of shape (times, modes)."""
    return np.array([r.E for r in reports])


def monotone(series: np.ndarray, slack: float, increasing: bool = False) -> bool:
    """Whether consecutive values never move the wrong way by more than ``slack``."""
    d = np.diff(np.asarray(series))
    return bool(np.all(d >= -slack)) if increasing else bool(np.all(d <= slack))


def kappa_estimate(reports: list[EnergyReport]) -> np.ndarray:
    """Per-mode ``max_t |U(t)| / |U(0)|`` (the growth constant of the norm bound)."""
    E = energy_matrix(reports)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sqrt(np.max(E, axis=0) / E[0])
    return np.where(E[0] > 0, ratio, 0.0)


def derivative_bound_ratio(traj: Trajectory) -> np.ndarray:
    """Per-mode ``max_t |U'(t)|^2 / (|F(0)|^2 + |U(0)|_{H^1}^2 + int |F'|^2)``.

    Reported only: the constant in this bound is not assumed.
    """
    from ..horizontal import ddx, ddy

    grid = traj.grid
    t = np.array(traj.times)
    M = traj.M
    X, Y = grid.mesh()
    out = np.zeros(M)
    for n in range(1, M + 1):
        fields = np.array([np.stack(s.modes[n - 1].components()) for s in traj.stacks])
        Ut = np.gradient(fields, t, axis=0, edge_order=2)
        num = max(inner_product(tuple(u), tuple(u), grid) for u in Ut)
        U0 = fields[0]
        h1 = inner_product(tuple(U0), tuple(U0), grid)
        h1 += inner_product(tuple(ddx(a, grid) for a in U0), tuple(ddx(a, grid) for a in U0), grid)
        h1 += inner_product(tuple(ddy(a, grid) for a in U0), tuple(ddy(a, grid) for a in U0), grid)
        den = h1
        if traj.forcing is not None and not traj.forcing.is_zero(n):
            Fs = np.array([np.stack(traj.forcing.evaluate(n, X, Y, s)) for s in t])
            den += inner_product(tuple(Fs[0]), tuple(Fs[0]), grid)
            Ft = np.gradient(Fs, t, axis=0, edge_order=2)
            sq = np.array([inner_product(tuple(a), tuple(a), grid) for a in Ft])
            den += float(trapezoid(sq, t))
        out[n - 1] = num / den if den > 0 else 0.0
    return out
