"""Exception types shared across the package."""


class IsneakError(Exception):
    """Base class for all package errors."""


class ParseError(IsneakError):
    """Malformed input text (DIMACS, CSV, sidecar JSON)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ContractViolation(IsneakError):
    """A caller broke an operation precondition."""


class UnsatisfiableModelError(IsneakError):
    """Model admits no valid assignment."""


class GenerationError(IsneakError):
    """Synthetic model generation exhausted its retry budget."""


class SchemaError(IsneakError):
    """Candidate table does not match the declared objectives."""


class UnsupportedOperationError(IsneakError):
    """Operation not available for this pool kind."""


class OracleError(IsneakError):
    """Oracle failed or timed out mid-run."""
