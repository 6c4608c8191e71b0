"""Exception taxonomy shared across the package and mapped to CLI exit codes."""

from __future__ import annotations


class AcoufluxError(Exception):
    """Base class for package errors."""
    category = "error"


class ConfigError(AcoufluxError):
    """Invalid configuration or arguments (CLI exit 2)."""
    category = "config"


class NumericalError(AcoufluxError):
    """Solver or factorization failure, residual above tolerance (CLI exit 3)."""
    category = "numerical"


class InstabilityError(AcoufluxError):
    """Time integration produced non-finite values (CLI exit 4)."""
    category = "instability"

    def __init__(self, message: str, step: int | None = None, time: float | None = None):
        super().__init__(message)
        self.step = step
        self.time = time
