"""Exceptions raised by the copula multiplier library."""


class CopulaMultiplierError(Exception):
    """Base class for all library errors."""


class ConfigurationError(CopulaMultiplierError, ValueError):
    """A setting, kernel name or model parameter is invalid."""


class DataFormatError(CopulaMultiplierError, ValueError):
    """Input data could not be parsed or contains non-finite values.

    Row and column are 1-based positions in the source file, when known.
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column

        location = []
        if row is not None:
            location.append(f'row {row}')
        if column is not None:
            location.append(f'column {column}')

        if location:
            message = f'{message} ({", ".join(location)})'

        super().__init__(message)


class BandwidthKernelNotSmooth(ConfigurationError):
    """The covariance function has no usable second derivative at zero."""


class NotPositiveSemiDefinite(CopulaMultiplierError, ArithmeticError):
    """The multiplier covariance matrix has a clearly negative eigenvalue."""


class DegenerateVariance(CopulaMultiplierError, ArithmeticError):
    """The plug-in variance constant of the bandwidth estimator is not positive."""
