"""Exception types shared across the package."""


class EslabError(Exception):
    """Base class for all errors raised by eslab."""


class ParameterError(EslabError, ValueError):
    """Invalid scheme, builder or experiment parameters."""


class DomainError(EslabError, ValueError):
    """A formula branch is outside its domain of definition."""


class BudgetError(EslabError, RuntimeError):
    """An enumeration would exceed the configured work budget."""


class RangeError(EslabError, OverflowError):
    """An integer input exceeds the accuracy cap."""


class SingularInputError(EslabError, ArithmeticError):
    """A small divisor vanished to floating accuracy."""


class NumericError(EslabError, ArithmeticError):
    """A numerical routine failed to converge."""


class ConfigError(EslabError, ValueError):
    """An experiment configuration could not be parsed."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
