"""Physical and numerical configuration of the channel problem."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class ChannelConfig:
    """Channel geometry and background-state parameters.

    The channel is ``(0, L1) x (0, L2) x (-L3, 0)``, periodic in x, with a
    uniform zonal flow ``U0bar``, constant Coriolis parameter ``f`` and
    buoyancy frequency ``Nbuoy``.
    """

    L1: float = 1.0
    L2: float = 1.0
    L3: float = 1.0
    U0bar: float = 1.0
    f: float = 0.0
    Nbuoy: float = 1.0

    def __post_init__(self):
        for name in ("L1", "L2", "L3", "U0bar", "Nbuoy"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")
        if not math.isfinite(self.f):
            raise ConfigError(f"f must be finite, got {self.f!r}")

    def lam(self, n: int) -> float:
        """Vertical wavenumber ``n*pi/L3``."""
        return n * math.pi / self.L3

    def wave_speed(self, n: int) -> float:
        """Gravity-wave speed ``N/lambda_n`` of mode ``n >= 1``."""
        if n < 1:
            raise ConfigError("wave speed is defined for n >= 1")
        return self.Nbuoy / self.lam(n)


@dataclass(frozen=True)
class Discretization:
    """Grid sizes, mode truncation and time-stepping horizon.

    ``Ny`` counts both walls; ``Nx`` excludes the duplicate periodic point.
    """

    Nx: int = 16
    Ny: int = 33
    M: int = 4
    Nz_quad: int | None = None
    dt: float = 1e-3
    Tend: float = 1.0

    def __post_init__(self):
        if self.Nx < 4 or self.Nx % 2:
            raise ConfigError(f"Nx must be even and >= 4, got {self.Nx}")
        if self.Ny < 5:
            raise ConfigError(f"Ny must be >= 5, got {self.Ny}")
        if self.M < 1:
            raise ConfigError(f"M must be >= 1, got {self.M}")
        if self.Nz_quad is None:
            object.__setattr__(self, "Nz_quad", 4 * self.M + 1)
        if self.Nz_quad < 4 * self.M:
            raise ConfigError(f"Nz_quad must be >= 4*M = {4 * self.M}, got {self.Nz_quad}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.Tend > 0:
            raise ConfigError(f"Tend must be positive, got {self.Tend}")

    def spacing(self, cfg: ChannelConfig) -> tuple[float, float]:
        return cfg.L1 / self.Nx, cfg.L2 / (self.Ny - 1)
