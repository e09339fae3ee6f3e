"""Exception hierarchy shared across the package.

Exit-code mapping for the CLI: DataError -> 2, ProviderError -> 3,
usage problems -> 1.
"""


class ExptrecError(Exception):
    """Base class for all package errors."""


class DataError(ExptrecError):
    """Malformed, inconsistent, or missing input data."""


class ProviderError(ExptrecError):
    """A model provider could not be reached or returned garbage."""
