"""Modal solver for the inviscid linearized primitive equations in a periodic channel."""

from .config import ChannelConfig, Discretization
from .domain import project_to_domain, reconstruct_physical, stack_from_initial
from .errors import (CFLViolation, CompatibilityError, ConfigError, DomainError, LPEError,
                     NonFiniteStateError)
from .expr import ExprError, parse_field_expression
from .horizontal import ChannelGrid
from .kernels import BACKEND
from .mode_n import STANDARD, SWAPPED
from .state import (BarotropicState, ForcingSpec, InitialCondition, ModalStack, ModeState,
                    PhysicalState)
from .timestep import IntegratorConfig, Stepper, cfl_dt, step
from .vertical import VerticalBasis, analyze

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BarotropicState", "CFLViolation", "ChannelConfig", "ChannelGrid",
    "CompatibilityError", "ConfigError", "Discretization", "DomainError", "ExprError",
    "ForcingSpec", "InitialCondition", "IntegratorConfig", "LPEError", "ModalStack",
    "ModeState", "NonFiniteStateError", "PhysicalState", "STANDARD", "SWAPPED", "Stepper",
    "VerticalBasis", "analyze", "cfl_dt", "parse_field_expression", "project_to_domain",
    "reconstruct_physical", "stack_from_initial", "step",
]
