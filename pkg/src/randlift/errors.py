"""Exception hierarchy shared by every randlift module."""


class RandLiftError(Exception):
    """Base class for all errors raised by randlift."""


class InvalidEdge(RandLiftError, ValueError):
    pass


class InvalidParams(RandLiftError, ValueError):
    pass


class ParseError(RandLiftError, ValueError):
    """Malformed input file; the message carries line (and column) context."""


class EigenFailure(RandLiftError, ArithmeticError):
    """The symmetric eigensolver exhausted its iteration cap."""


class SpectrumContainmentViolated(RandLiftError, ArithmeticError):
    """A base spectrum was not found inside the spectrum of its lift.

    Old eigenvalues are always contained in the lift spectrum, so this
    points at a tolerance problem or a bug in lift construction.
    """


class DegreeZeroUnsupported(RandLiftError, ValueError):
    pass


class NotStochastic(RandLiftError, ValueError):
    pass


class NotReversible(RandLiftError, ValueError):
    pass


class InvalidStationary(RandLiftError, ValueError):
    pass


class ConfigError(RandLiftError, ValueError):
    pass
