"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures to
the documented process exit status without a lookup table.
"""


class SftLabError(Exception):
    exit_code = 1


class ValidationError(SftLabError, ValueError):
    """Malformed input: bad matrix, inadmissible word, unknown field."""

    exit_code = 2


class NumericError(SftLabError, ArithmeticError):
    """An iterative solver missed its residual target."""

    exit_code = 3


class CapabilityError(SftLabError):
    """The request is well formed but cannot be served (caps, lattice, etc.)."""

    exit_code = 4


class RowOrColumnEmpty(ValidationError):
    pass


class WordTooShort(ValidationError):
    pass


class RangeTooLarge(ValidationError):
    pass


class UnknownObservable(ValidationError):
    pass


class UnsupportedTransition(ValidationError):
    pass


class DegenerateSigma(ValidationError):
    pass


class NoConvergence(NumericError):
    pass


class SolveFailure(NumericError):
    pass


class NotPrimitive(CapabilityError):
    pass


class LengthTooLarge(CapabilityError):
    pass


class PeriodTooLarge(CapabilityError):
    pass


class BlockAlphabetTooLarge(CapabilityError):
    pass


class EnumerationCap(CapabilityError):
    pass


class MemoryCap(CapabilityError):
    pass


class DepthTooLarge(CapabilityError):
    pass


class NonLattice(CapabilityError):
    pass


class ZeroProbability(CapabilityError):
    pass


class OutOfDomain(CapabilityError):
    """Raised for rate-function queries outside the achievable mean interval."""

    def __init__(self, a, interval):
        super().__init__(f"a={a!r} outside achievable interval [{interval[0]!r}, {interval[1]!r}]")
        self.a = a
        self.interval = interval
