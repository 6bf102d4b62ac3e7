"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid thresholds, unknown entity types, bad hyperparameters."""


class ParseError(ValueError):
    """A playback log line could not be parsed (strict mode only)."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ModelFormatError(ValueError):
    """A serialized model or vocabulary file is corrupt or of the wrong version."""


class DivergenceError(FloatingPointError):
    """Training produced a non-finite gradient."""
