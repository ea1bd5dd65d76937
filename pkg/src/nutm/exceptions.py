"""Exception hierarchy shared by all modules.

Each class maps to one failure family; the command-line front end turns
them into distinct exit codes.
"""

from __future__ import annotations


class NUTMError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(NUTMError):
    """Invalid or inconsistent user configuration."""


class DomainError(NUTMError, ValueError):
    """A point was passed outside the set where an operation is defined."""


class NonIntegrableError(NUTMError):
    """A ray density does not decay fast enough to be integrated."""


class SpectralError(NUTMError):
    """Failure while computing spectral functions from data."""


class UnsupportedConfiguration(NUTMError):
    """The contour deformation cannot be carried out for these data."""


class SolverError(NUTMError):
    """The collocated singular integral equation could not be solved."""

    def __init__(self, message: str, cond_estimate: float | None = None):
        super().__init__(message)
        self.cond_estimate = cond_estimate
