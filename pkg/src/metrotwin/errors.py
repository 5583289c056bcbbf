"""Shared exception types.

Every error raised on a bad input derives from ValidationError so callers
(CLI, HTTP layer) can map the whole family onto one response path.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""

    code = "validation"


class InsufficientDataError(ValidationError):
    """Not enough samples to evaluate the requested statistic or model."""

    code = "insufficient-data"


class DegenerateInputError(ValidationError):
    """Input is technically well formed but the result is undefined."""

    code = "degenerate-input"


class SingularDesignError(ValidationError):
    """Design matrix is rank deficient."""

    code = "singular-design"

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


class ConfigurationError(ValidationError):
    """A required piece of configuration is missing or inconsistent."""

    code = "configuration"


class ModelUnavailableError(ValidationError):
    """No active model is published for the requested operation."""

    code = "model-unavailable"


class TrainingDivergedError(RuntimeError):
    """Training produced non-finite loss; diagnostics carried along."""

    code = "training-diverged"

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
