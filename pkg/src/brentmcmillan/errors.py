"""Exception types shared by the library and the CLI."""


class BrentMcMillanError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class SeriesOrderError(BrentMcMillanError, ValueError):
    """Truncation orders of two series do not match, or a series has the wrong shape."""


class SingularSeriesError(BrentMcMillanError, ZeroDivisionError):
    """A series operation needs a nonzero leading coefficient."""


class UnsupportedOrderError(BrentMcMillanError, ValueError):
    """Requested order exceeds the coefficient families that are available."""

    exit_code = 3


class PrecisionError(BrentMcMillanError, ArithmeticError):
    """Working precision (or a reference value) is too short for the requested result."""

    exit_code = 4


class CertificationError(BrentMcMillanError, ArithmeticError):
    """A certified error bound could not be established."""

    exit_code = 2
