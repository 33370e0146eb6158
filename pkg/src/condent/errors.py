"""Exception types raised across the package."""


class CondentError(Exception):
    """Base class for all package errors."""


class ValidationError(CondentError, ValueError):
    """Invalid input. ``violations`` holds ``(field_path, message)`` pairs."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [("", violations)]
        self.violations = list(violations)
        msg = "; ".join(f"{p}: {m}" if p else m for p, m in self.violations)
        super().__init__(msg)


class DimensionError(ValidationError):
    pass


class CapabilityError(CondentError, NotImplementedError):
    """The requested operation is not available for this channel or density."""


class DomainError(CondentError, ValueError):
    """Argument outside the region where a closed form is defined."""


class PoleError(DomainError):
    pass


class UnboundedSupportError(DomainError):
    """The support of the entanglement distribution has no finite upper edge."""


class NumericalError(CondentError, ArithmeticError):
    pass


class AccuracyError(NumericalError):
    """A truncation or discretisation diagnostic exceeded its threshold."""


class DegenerateOutcomeError(NumericalError):
    pass


class ConfigError(ValidationError):
    pass
