"""Exception types raised across the package."""


class QrngError(Exception):
    """Base class for package errors."""


class DimensionError(QrngError, ValueError):
    """Invalid or mismatched Hilbert-space dimension."""


class DomainError(QrngError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class InsufficientSeedError(QrngError, ValueError):
    """Seed bits ran out before a schedule could be drawn."""


class BudgetError(QrngError, ValueError):
    """Exact enumeration would exceed the composition budget."""


class ExtractionRefused(QrngError):
    """The certificate does not allow any bits to be extracted."""


class FormatError(QrngError, ValueError):
    """Malformed or inconsistent file contents."""
