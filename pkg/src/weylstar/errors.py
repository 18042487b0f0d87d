"""Exception hierarchy shared by the library and the command line."""


class WeylStarError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(WeylStarError, ValueError):
    """Operands live over different numbers of generators."""


class DegreeCapExceeded(WeylStarError, ArithmeticError):
    """A polynomial product would exceed the configured degree cap."""


class SchemaError(WeylStarError, ValueError):
    """A serialized element does not match its schema."""


class NumericalDomainError(WeylStarError, ArithmeticError):
    """Evaluation left the domain where the closed form is defined.

    Raised for singular points of star exponentials, chart exits,
    violated integrability conditions and failed path continuation.
    """


class SingularPointError(NumericalDomainError):
    """A path or an evaluation point hits a singular point."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ChartError(NumericalDomainError):
    """A matrix denominator is singular in the requested chart."""


class SiegelConditionError(NumericalDomainError):
    """The linear form is not rapidly decreasing for the given K."""
