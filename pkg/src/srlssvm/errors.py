"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input -> 2, data/parse
problems -> 3, numerical breakdown -> 4.
"""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class DataFormatError(ValueError):
    """An input file cannot be parsed.

    ``line`` carries the 1-based line number for text formats, ``offset``
    the byte offset for model files, when known.
    """

    def __init__(self, message: str, *, line: int | None = None,
                 offset: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class UnsupportedVersionError(DataFormatError):
    """A model file declares a format version this build does not read."""


class NumericalError(ArithmeticError):
    """A computation broke down numerically (indefinite kernel, singular system)."""
