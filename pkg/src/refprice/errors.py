"""Exception hierarchy shared by the library and the command-line driver."""


class RefPriceError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(RefPriceError, ValueError):
    """An argument violates a documented precondition."""


class PanelFormatError(InvalidInputError):
    """A panel file could not be parsed or violates a panel invariant.

    Attributes:
        row: 1-based line number in the file (header is line 1), or None when the
            problem is not attached to a single row.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"line {row}: {message}"
        super().__init__(message)


class ConfigError(InvalidInputError):
    """A configuration or report file is malformed or fails validation."""


class EstimationError(RefPriceError):
    """Maximum likelihood estimation failed at every start."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
