"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: input/parameter problems -> 2,
numeric failures -> 3, guard refusals -> 4.
"""


class SimgaError(Exception):
    """Base class for all package errors."""


class InputFormatError(SimgaError):
    """Malformed input file (bad token, wrong arity, empty payload)."""


class ParameterError(SimgaError, ValueError):
    """Argument outside its documented domain."""


class NumericError(SimgaError):
    """Non-finite value produced where a finite one is required."""


class DivergenceError(NumericError):
    """Training loss became non-finite; message names the epoch."""


class GuardError(SimgaError):
    """Refusal to run past an explicit resource guard (dense-size, enumeration)."""
