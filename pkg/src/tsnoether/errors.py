"""Exception hierarchy shared by every module of the package."""


class TimeScaleError(Exception):
    """Base class for all package errors."""


class NonDivisibleInterval(TimeScaleError, ValueError):
    pass


class InvalidBase(TimeScaleError, ValueError):
    pass


class TooFewPoints(TimeScaleError, ValueError):
    pass


class NonFinite(TimeScaleError, ValueError):
    pass


class PointNotInScale(TimeScaleError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ZeroGraininess(TimeScaleError, ZeroDivisionError):
    pass


class ScaleSpecError(TimeScaleError, ValueError):
    pass


class ExprSyntaxError(TimeScaleError, SyntaxError):
    """Parse failure at a byte offset of the source text."""

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        self.message = message
        super().__init__(message)

    def __str__(self):
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        return f"{self.message} at offset {self.offset}{exp}"


class UnknownFunction(TimeScaleError, NameError):
    pass


class UnknownVariable(TimeScaleError, NameError):
    pass


class DomainError(TimeScaleError, ArithmeticError):
    pass


class DimensionMismatch(TimeScaleError, ValueError):
    pass


class RegularityViolation(TimeScaleError, ArithmeticError):
    pass


class RhoSigmaViolation(TimeScaleError, ValueError):
    pass


class NoConvergence(TimeScaleError, RuntimeError):
    def __init__(self, message, best_residual=float("nan")):
        self.best_residual = best_residual
        super().__init__(f"{message} (best residual {best_residual:.3e})")


class NotAnExtremal(TimeScaleError, ValueError):
    pass


class NotInvariant(TimeScaleError, ValueError):
    pass


class NonMonotoneTimeMap(TimeScaleError, ValueError):
    pass


class ProblemFileError(TimeScaleError, ValueError):
    pass
