"""Conditional entanglement of open quantum systems under coherent-state bath measurements."""

__version__ = "0.1.0"

from .entanglement import MeasureKind, measure_mixed_concurrence, measure_pure
from .errors import (
    AccuracyError,
    CapabilityError,
    CondentError,
    ConfigError,
    DegenerateOutcomeError,
    DimensionError,
    DomainError,
    PoleError,
    UnboundedSupportError,
    ValidationError,
)
from .model import (
    Dephasing,
    Lorentzian,
    MarkovAmplitudeDamping,
    OhmicCutoff,
    OUAmplitudeDamping,
    PurelyOhmic,
    Superohmic,
    SystemSpec,
    load_system,
    validate_system,
)
from .propagator import OutcomePoint, propagate, scaling_function, scaling_law_x

__all__ = [
    "AccuracyError", "CapabilityError", "CondentError", "ConfigError", "DegenerateOutcomeError",
    "Dephasing", "DimensionError", "DomainError", "Lorentzian", "MarkovAmplitudeDamping", "MeasureKind",
    "OUAmplitudeDamping", "OhmicCutoff", "OutcomePoint", "PoleError", "PurelyOhmic", "Superohmic",
    "SystemSpec", "UnboundedSupportError", "ValidationError", "load_system", "measure_mixed_concurrence",
    "measure_pure", "propagate", "scaling_function", "scaling_law_x", "validate_system",
]
