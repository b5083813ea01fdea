"""Exception hierarchy shared across the package."""


class NomaError(Exception):
    """Base class for all package errors."""


class ConfigurationError(NomaError, ValueError):
    """Invalid parameters or an inapplicable strategy/config combination."""


class CapabilityError(NomaError):
    """The instance is too large for an exhaustive or exact routine."""


class ContractViolation(NomaError, ValueError):
    """A caller broke a precondition (unsorted input, same-group edge, ...)."""


class DomainError(NomaError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class ConsistencyError(NomaError, ValueError):
    """Two objects that must describe the same instance disagree."""


class ScenarioFormatError(NomaError, ValueError):
    """A scenario file could not be parsed or failed validation."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
