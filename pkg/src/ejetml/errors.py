"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: DataError -> 2, NumericError -> 3.
"""


class EjetError(Exception):
    """Base class for all toolkit errors."""


class DataError(EjetError, ValueError):
    """Invalid, malformed or unsuitable input data."""


class SchemaError(DataError):
    """CSV header or model-file schema mismatch."""


class RowError(DataError):
    """A single CSV row failed validation or parsing."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NumericError(EjetError, ArithmeticError):
    """A fit diverged or produced non-finite values."""
