"""Exceptions raised by the simulation and analysis modules."""


class FieldoscopyError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(FieldoscopyError, ValueError):
    """A parameter or configuration value is invalid.

    Parameters
    ----------
    message : str
        Description of the problem.
    key : str, optional
        The configuration key responsible, if there is one.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key

    def __str__(self):
        message = super().__str__()
        if self.key is None:
            return message
        return '{}: {}'.format(self.key, message)


class NumericError(FieldoscopyError, ArithmeticError):
    """A numerical procedure failed or received unusable input."""


class EstimationError(NumericError):
    """A parameter estimate cannot be formed from the given data."""
