"""Exception types shared across the package.

The split matters to the CLI: data problems exit with code 2, numerical
failures with code 3.
"""


class PointspecError(Exception):
    """Base class for package-specific errors."""


class DataError(PointspecError):
    """Invalid input data or configuration (bad CSV, bad window, bad spec)."""


class NumericalError(PointspecError):
    """A numerical contract could not be met (quadrature, coverage, fits)."""
