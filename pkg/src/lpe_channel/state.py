"""Solution-state containers for the modal solver."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

FieldFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass
class CharacteristicPair:
    """Characteristic variables ``zeta = v + psi/N`` and ``chi = v - psi/N`` on one y row."""

    zeta: np.ndarray
    chi: np.ndarray

    def to_primitive(self, nbuoy: float) -> tuple[np.ndarray, np.ndarray]:
        return 0.5 * (self.zeta + self.chi), 0.5 * nbuoy * (self.zeta - self.chi)


@dataclass
class ModeState:
    """Horizontal coefficient fields of baroclinic mode ``n >= 1``."""

    n: int
    u: np.ndarray
    v: np.ndarray
    psi: np.ndarray

    def copy(self) -> "ModeState":
        return ModeState(self.n, self.u.copy(), self.v.copy(), self.psi.copy())

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.u, self.v, self.psi)

    def axpy(self, a: float, other: "ModeState") -> "ModeState":
        return ModeState(self.n, self.u + a * other.u, self.v + a * other.v,
                         self.psi + a * other.psi)

    def scaled(self, a: float) -> "ModeState":
        return ModeState(self.n, a * self.u, a * self.v, a * self.psi)

    @classmethod
    def zeros(cls, n: int, shape: tuple[int, int]) -> "ModeState":
        return cls(n, np.zeros(shape), np.zeros(shape), np.zeros(shape))


@dataclass
class BarotropicState:
    """Depth-independent velocity ``(u0, v0)``.

    ``omega``, ``sigma`` and ``phi0`` are derived caches (vorticity,
    streamfunction, pressure) filled in by the mode-zero routines.
    """

    u0: np.ndarray
    v0: np.ndarray
    omega: np.ndarray | None = None
    sigma: np.ndarray | None = None
    phi0: np.ndarray | None = None

    def copy(self) -> "BarotropicState":
        return copy.deepcopy(self)

    def components(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.u0, self.v0)

    @classmethod
    def zeros(cls, shape: tuple[int, int]) -> "BarotropicState":
        return cls(np.zeros(shape), np.zeros(shape))


@dataclass
class ModalStack:
    """Barotropic mode plus ``M`` baroclinic modes ordered ``n = 1..M``."""

    barotropic: BarotropicState
    modes: list[ModeState]
    time: float = 0.0

    def __post_init__(self):
        for i, m in enumerate(self.modes):
            if m.n != i + 1:
                raise ValueError(f"modes[{i}] has n={m.n}, expected {i + 1}")

    @property
    def M(self) -> int:
        return len(self.modes)

    def copy(self) -> "ModalStack":
        return ModalStack(self.barotropic.copy(), [m.copy() for m in self.modes], self.time)

    def combine(self, a: float, other: "ModalStack", b: float) -> "ModalStack":
        """Linear combination ``a*self + b*other`` (caches dropped)."""
        bt = BarotropicState(a * self.barotropic.u0 + b * other.barotropic.u0,
                             a * self.barotropic.v0 + b * other.barotropic.v0)
        modes = [ModeState(m.n, a * m.u + b * o.u, a * m.v + b * o.v, a * m.psi + b * o.psi)
                 for m, o in zip(self.modes, other.modes)]
        return ModalStack(bt, modes, self.time)

    @classmethod
    def zeros(cls, M: int, shape: tuple[int, int]) -> "ModalStack":
        return cls(BarotropicState.zeros(shape), [ModeState.zeros(n, shape) for n in range(1, M + 1)])


@dataclass
class PhysicalState:
    """Full 3D fields of shape ``(Nx, Ny, Nz)`` on the quadrature nodes."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    z: np.ndarray | None = None


@dataclass
class ForcingSpec:
    """Per-mode forcing ``(F_u, F_v, F_psi)`` as functions of ``(x, y, t)``.

    ``modes`` maps the mode index to a triple of callables (or None for a
    zero component).  Mode 0 must not carry a temperature component.
    """

    modes: Mapping[int, tuple] = field(default_factory=dict)

    def __post_init__(self):
        zero = self.modes.get(0)
        if zero is not None and len(zero) > 2 and zero[2] is not None:
            raise ValueError("mode 0 forcing has no temperature component")

    def is_zero(self, n: int) -> bool:
        comps = self.modes.get(n)
        return comps is None or all(c is None for c in comps)

    def evaluate(self, n: int, X: np.ndarray, Y: np.ndarray, t: float):
        """Forcing arrays for mode ``n`` at time ``t``, or None if identically zero."""
        if self.is_zero(n):
            return None
        comps = self.modes[n]
        width = 2 if n == 0 else 3
        out = []
        for i in range(width):
            fn = comps[i] if i < len(comps) else None
            out.append(np.zeros_like(X) if fn is None
                       else np.broadcast_to(np.asarray(fn(X, Y, t), dtype=float), X.shape).copy())
        return tuple(out)


@dataclass
class InitialCondition:
    """Per-mode initial fields: ``{0: (u, v), n: (u, v, psi)}``."""

    fields: dict[int, tuple[np.ndarray, ...]]
    residuals: dict[int, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def with_fields(self, fields: dict[int, tuple[np.ndarray, ...]], **kw) -> "InitialCondition":
        return replace(self, fields=fields, **kw)
