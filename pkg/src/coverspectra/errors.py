"""Exception hierarchy.

Every error raised by the library derives from :class:`CoverSpectraError`.
Errors that describe bad input also derive from :class:`ValueError`; numeric
failures derive from :class:`NumericalError`.  The CLI maps the two families
to different exit codes.
"""


class CoverSpectraError(Exception):
    """Base class for all library errors."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self), **self.details}


class InputError(CoverSpectraError, ValueError):
    """Invalid arguments or configuration."""


class NumericalError(CoverSpectraError, ArithmeticError):
    """A solver failed to produce a result."""


# -- problem instance ---------------------------------------------------------

class InvalidSpec(InputError):
    pass


class LengthMismatch(InvalidSpec):
    pass


class RatioOutOfRange(InvalidSpec):
    pass


class ProbOutOfRange(InvalidSpec):
    pass


class ProbSumError(InvalidSpec):
    pass


class DigitOutOfRange(InputError):
    pass


class WordTooLong(InputError):
    pass


class AlphaNonPositive(InputError):
    pass


class HorizonZero(InputError):
    pass


# -- solvers ------------------------------------------------------------------

class NoConvergence(NumericalError):
    pass


class BracketFailure(NumericalError):
    pass


class Infeasible(NumericalError):
    pass


# -- probabilistic pressure ---------------------------------------------------

class DegenerateM(InputError):
    pass


class TooLarge(InputError):
    pass


class TableOverflow(InputError):
    pass


# -- simulation ---------------------------------------------------------------

class DepthTooLarge(InputError):
    pass


class WeightError(InputError):
    pass


class TruncatedOrbit(InputError):
    pass


class GammaTooLarge(InputError):
    pass


class TableTooSmall(InputError):
    pass


class ConfigError(InputError):
    pass
