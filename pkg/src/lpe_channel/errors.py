"""Exception types raised across the package."""


class LPEError(Exception):
    """Base class for solver errors."""


class ConfigError(LPEError, ValueError):
    """Invalid physical, numerical or run configuration."""


class DomainError(LPEError, ValueError):
    """Argument outside the domain of a basis function or operator."""


class CompatibilityError(LPEError):
    """A Neumann problem whose data violate the solvability condition."""

    def __init__(self, message: str, defect: float):
        super().__init__(f"{message} (defect={defect:.3e})")
        self.defect = defect


class CFLViolation(LPEError):
    """Requested time step exceeds the stability bound."""


class NonFiniteStateError(LPEError):
    """NaN or Inf appeared in a mode during time stepping."""

    def __init__(self, mode: int, time: float):
        super().__init__(f"non-finite values in mode {mode} at t={time:.6g}")
        self.mode = mode
        self.time = time
