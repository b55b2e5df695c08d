"""Exception hierarchy shared by every moequant module.

Errors fall into two families that the CLI maps onto exit codes: configuration
problems (bad names, bad parameters, unreadable files) and numerical failures
(non-convergence, degenerate densities, empty regions).
"""


class MoeQuantError(Exception):
    """Base class for all library errors."""


class ConfigError(MoeQuantError):
    """A configuration value, file or name could not be resolved."""


class NumericalError(MoeQuantError):
    """A numerical routine could not produce a trustworthy result."""


class InvalidParamsError(ConfigError, ValueError):
    """A parameter lies outside its admissible range."""


class InvalidExpertCountError(InvalidParamsError):
    """The number of experts m is smaller than one."""


class InvalidCountsError(InvalidParamsError):
    """Per-axis region counts do not describe a valid grid."""


class UnknownTargetError(ConfigError, KeyError):
    """The requested target function is not in the registry."""

    def __str__(self) -> str:
        """Returns the message without KeyError's repr quoting."""
        return str(self.args[0]) if self.args else ""


class DimensionMismatchError(ConfigError, ValueError):
    """Objects that must share an input dimension do not."""


class OutOfDomainError(InvalidParamsError):
    """An input point lies outside the unit cube."""


class EmptyDatasetError(InvalidParamsError):
    """An operation that needs training data received none."""


class UnboundedNoiseError(InvalidParamsError):
    """A bounded-noise guarantee was requested for an unbounded noise model."""


class NonFiniteValueError(NumericalError, ValueError):
    """An integrand evaluated to NaN or infinity."""


class DepthExceededError(NumericalError):
    """Adaptive refinement hit its depth cap without converging."""


class NegativeDensityError(NumericalError, ValueError):
    """A function required to be nonnegative took a negative value."""


class DegenerateTableError(NumericalError):
    """A cumulative table has zero total mass."""


class OutOfRangeError(NumericalError, ValueError):
    """A value lies outside the range of a monotone table."""


class NormalizationError(NumericalError):
    """A probability density does not integrate to one."""


class DegenerateDensityError(NumericalError):
    """A segment density vanishes where it must stay positive."""


class NonMonotoneError(NumericalError):
    """Breakpoints produced by inversion are not strictly increasing."""


class ZeroMassRegionError(NumericalError):
    """A region carries (numerically) zero probability mass."""


class DegenerateRegionError(InvalidParamsError):
    """A box region has a side of nonpositive length."""
