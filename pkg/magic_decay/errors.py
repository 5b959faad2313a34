"""Exception hierarchy shared by the library and the CLI."""
from __future__ import annotations


class MagicDecayError(RuntimeError):
    """Base error; ``code`` is printed by the CLI as a machine-readable prefix."""

    code = "E_MAGIC"


class InputError(MagicDecayError, ValueError):
    """Raised when an argument violates a documented precondition."""

    code = "E_INPUT"


class CapacityError(MagicDecayError):
    """Raised when a request exceeds a configured size cap."""

    code = "E_CAPACITY"


class UnsupportedError(MagicDecayError):
    code = "E_UNSUPPORTED"


class BasisFormatError(MagicDecayError):
    """Raised when a stabilizer-basis cache file is malformed."""

    code = "E_FORMAT"


class NumericalError(MagicDecayError):
    code = "E_NUMERIC"


class SolverError(MagicDecayError):
    """Raised when every LP backend fails to reach an optimum."""

    code = "E_SOLVER"

    def __init__(self, message: str, *, iterations: int = 0, backend: str | None = None) -> None:
        super().__init__(message)
        self.iterations = iterations
        self.backend = backend
