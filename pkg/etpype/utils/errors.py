"""Exception hierarchy shared by the physics nodes and the command line.

Configuration problems map to exit code 2, everything raised by the
physics layer (ranges, aliasing, geometry, fits) maps to exit code 3.
"""


class EtpypeError(Exception):
    """Base class of every error raised by etpype."""

    exit_code = 3


class InvalidArgumentError(EtpypeError, ValueError):
    """A scalar argument violates its precondition."""


class ConfigurationError(EtpypeError, ValueError):
    """The scenario, a schema field or a grid is not usable."""

    exit_code = 2


class RangeError(EtpypeError, ValueError):
    """A value lies outside the range supported by the setup."""


class AliasingError(RangeError):
    """A requested delay exceeds the aliasing limit of the shaper."""


class GeometryError(EtpypeError, ValueError):
    """The grating/SLM geometry is not physically realisable."""


class InsufficientDataError(EtpypeError, ValueError):
    """Not enough points to determine the requested model."""


class FitFailureError(EtpypeError, RuntimeError):
    """A fit did not converge or returned an unphysical result.

    Args:
        message (str): Description of the failure.
        last_iterate (dict, optional): Parameter values at the last
            iteration, when available.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate or {}


def exit_code_for(exc):
    """Return the command-line exit status for an exception."""
    if isinstance(exc, FileNotFoundError):
        return 2
    return getattr(exc, "exit_code", 3)
