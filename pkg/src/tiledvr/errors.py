"""Exception types shared across the package."""


class TiledVRError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TiledVRError, ValueError):
    """Invalid construction parameters (frame size, tile count, template...)."""


class DomainError(TiledVRError, ValueError):
    """An argument outside the domain of an operation."""


class ValidationError(TiledVRError, ValueError):
    """One or more invariants of a data structure are violated.

    ``violations`` holds one message per broken rule.
    """

    def __init__(self, violations, where=None):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        self.where = where
        msg = "; ".join(self.violations)
        if where:
            msg = f"{where}: {msg}"
        super().__init__(msg)


class DocumentSyntaxError(ValidationError):
    """Unparseable document; carries the 1-based line and column."""

    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__([f"{message} (line {line}, column {column})"])


class ComputationError(TiledVRError, RuntimeError):
    """A computation cannot proceed with the given inputs."""
