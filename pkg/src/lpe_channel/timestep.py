"""Runge-Kutta time stepping of the modal stack.

Two schemes are provided for the baroclinic modes:

``rk4``
    classical four-stage RK4 on the full tendency.
``rk4-integrating-factor``
    Lawson RK4: the ``U0bar d/dx`` term is integrated exactly by a Fourier
    phase shift and RK4 is applied to the remaining coupling.

Either way every stage state is projected back onto the wall-condition
subspace.  The barotropic mode is always advanced by exact vorticity
transport (see :mod:`lpe_channel.mode_zero`), independent of the scheme.

Modes are independent, so one step is a map over modes; ``LPE_THREADS``
caps the worker count.  Results are collected by mode index, so the
trajectory does not depend on scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ChannelConfig, Discretization
from .errors import CFLViolation, ConfigError, NonFiniteStateError
from .horizontal import ChannelGrid, inner_product
from .mode_n import STANDARD, ModeOperatorContext, enforce_characteristic_bc, tendency_n
from .mode_zero import step_barotropic
from .state import ForcingSpec, ModalStack, ModeState

RK4 = "rk4"
RK4_IF = "rk4-integrating-factor"
SCHEMES = (RK4, RK4_IF)


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = RK4_IF
    cfl_number: float = 0.5
    dt_override: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not 0.0 < self.cfl_number <= 1.0:
            raise ConfigError(f"cfl_number must lie in (0, 1], got {self.cfl_number}")
        if self.dt_override is not None and not self.dt_override > 0:
            raise ConfigError("dt_override must be positive")


def cfl_dt(cfg: ChannelConfig, disc: Discretization,
           integ: IntegratorConfig = IntegratorConfig(), eps: float = 1e-14) -> float:
    """Largest stable step for the baroclinic modes.

    ``dt = cfl * min_n h / (c_n + |f| h + eps)`` with ``h = min(dy, dx/pi)``:
    the gravity waves travel in both directions, and the spectral x
    derivative resolves wavenumbers up to ``pi/dx``.  Without the integrating
    factor, advection adds ``dx/(pi U0bar)`` to the minimum.
    """
    dx, dy = disc.spacing(cfg)
    h = min(dy, dx / math.pi)
    c1 = cfg.wave_speed(1)  # fastest mode
    dt = h / (c1 + abs(cfg.f) * h + eps)
    if integ.scheme == RK4:
        dt = min(dt, dx / (math.pi * cfg.U0bar))
    return integ.cfl_number * dt


def mode_energy(state: ModeState, grid: ChannelGrid) -> float:
    U = state.components()
    return 0.5 * inner_product(U, U, grid)


def _worker_count(jobs: int) -> int:
    raw = os.environ.get("LPE_THREADS", "")
    try:
        cap = int(raw) if raw else 1
    except ValueError:
        raise ConfigError(f"LPE_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(cap, jobs))


class Stepper:
    """Advances a :class:`ModalStack` by fixed steps.

    Parameters
    ----------
    grid:
        Shared grid and operators.
    forcing:
        Per-mode forcing, or None.
    integ:
        Scheme and CFL settings.
    bc_variant:
        ``"standard"`` or ``"swapped"`` wall conditions for modes ``n >= 1``.
    """

    def __init__(self, grid: ChannelGrid, forcing: ForcingSpec | None = None,
                 integ: IntegratorConfig = IntegratorConfig(), bc_variant: str = STANDARD):
        self.grid = grid
        self.forcing = forcing or ForcingSpec({})
        self.integ = integ
        self.bc_variant = bc_variant
        self._X, self._Y = grid.mesh()
        self._ctx: dict[int, ModeOperatorContext] = {}

    def context(self, n: int) -> ModeOperatorContext:
        if n not in self._ctx:
            self._ctx[n] = ModeOperatorContext.build(n, self.grid)
        return self._ctx[n]

    def check_dt(self, dt: float, override: bool = False) -> None:
        limit = cfl_dt(self.grid.cfg, self.grid.disc, self.integ)
        if dt > limit * (1 + 1e-12) and not override:
            raise CFLViolation(f"dt={dt:.6g} exceeds the stability limit {limit:.6g}")

    # -- baroclinic modes ---------------------------------------------------

    def _force(self, n: int, t: float):
        return self.forcing.evaluate(n, self._X, self._Y, t)

    def _project(self, state: ModeState) -> ModeState:
        return enforce_characteristic_bc(state, self.grid.cfg.Nbuoy, self.bc_variant, inplace=True)

    def _shift(self, state: ModeState, tau: float) -> ModeState:
        """Exact advection of all three fields over a duration ``tau``."""
        xs = self.grid.xs
        stacked = np.stack(state.components())
        hat = np.fft.rfft(stacked, axis=1)
        hat *= xs.phase(self.grid.cfg.U0bar, tau)[None, :, None]
        u, v, p = np.fft.irfft(hat, n=xs.Nx, axis=1)
        return ModeState(state.n, u, v, p)

    def step_mode(self, state: ModeState, t: float, dt: float) -> ModeState:
        ctx = self.context(state.n)
        h = dt
        if self.integ.scheme == RK4:
            def rhs(s, tt):
                return tendency_n(s, self._force(s.n, tt), tt, ctx)

            k1 = rhs(state, t)
            k2 = rhs(self._project(state.axpy(0.5 * h, k1)), t + 0.5 * h)
            k3 = rhs(self._project(state.axpy(0.5 * h, k2)), t + 0.5 * h)
            k4 = rhs(self._project(state.axpy(h, k3)), t + h)
            out = ModeState(state.n,
                            state.u + h / 6 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u),
                            state.v + h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v),
                            state.psi + h / 6 * (k1.psi + 2 * k2.psi + 2 * k3.psi + k4.psi))
            return self._project(out)

        def rhs(s, tt):
            return tendency_n(s, self._force(s.n, tt), tt, ctx, advect=False)

        E = self._shift
        half_u = E(state, 0.5 * h)
        full_u = E(state, h)
        k1 = rhs(state, t)
        k2 = rhs(self._project(E(state.axpy(0.5 * h, k1), 0.5 * h)), t + 0.5 * h)
        k3 = rhs(self._project(half_u.axpy(0.5 * h, k2)), t + 0.5 * h)
        k4 = rhs(self._project(full_u.axpy(h, E(k3, 0.5 * h))), t + h)
        k1f = E(k1, h)
        k23 = E(k2.axpy(1.0, k3), 0.5 * h)
        out = ModeState(state.n,
                        full_u.u + h / 6 * (k1f.u + 2 * k23.u + k4.u),
                        full_u.v + h / 6 * (k1f.v + 2 * k23.v + k4.v),
                        full_u.psi + h / 6 * (k1f.psi + 2 * k23.psi + k4.psi))
        return self._project(out)

    # -- barotropic mode ----------------------------------------------------

    def _barotropic_forcing(self):
        if self.forcing.is_zero(0):
            return None

        def fn(s):
            return self._force(0, s)[:2]
        return fn

    # -- whole stack --------------------------------------------------------

    def step(self, stack: ModalStack, dt: float) -> ModalStack:
        t = stack.time
        jobs = [None] + list(stack.modes)

        def run(item):
            if item is None:
                return step_barotropic(stack.barotropic, self._barotropic_forcing(), t, dt, self.grid)
            return self.step_mode(item, t, dt)

        workers = _worker_count(len(jobs))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run, jobs))
        else:
            results = [run(j) for j in jobs]

        for idx, res in enumerate(results):
            if not all(np.all(np.isfinite(a)) for a in res.components()):
                raise NonFiniteStateError(idx, t + dt)
        return ModalStack(results[0], results[1:], t + dt)

    def advance(self, stack: ModalStack, dt: float, nsteps: int, callback=None) -> ModalStack:
        """Take ``nsteps`` steps, calling ``callback(step_index, stack)`` after each."""
        for i in range(nsteps):
            stack = self.step(stack, dt)
            if callback is not None:
                callback(i + 1, stack)
        return stack


def step(stack: ModalStack, forcing: ForcingSpec | None, dt: float, grid: ChannelGrid,
         integ: IntegratorConfig = IntegratorConfig(), bc_variant: str = STANDARD) -> ModalStack:
    """One step of the whole stack (convenience wrapper around :class:`Stepper`)."""
    return Stepper(grid, forcing, integ, bc_variant).step(stack, dt)


def steps_for(T: float, dt: float) -> int:
    """Number of steps covering ``[0, T]``; ``dt`` must divide ``T`` to 1e-9."""
    n = round(T / dt)
    if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ConfigError(f"dt={dt} does not divide T={T}")
    return n
