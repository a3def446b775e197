"""Exception hierarchy for spexbma.

All package errors derive from :class:`SpexbmaError` so callers can catch
everything with one clause; the subclasses distinguish validation problems
(bad inputs or parameters) from numeric/fit failures (valid inputs on which
the computation could not be completed).
"""


class SpexbmaError(Exception):
    """Base class for all spexbma errors."""


class InvalidParameterError(SpexbmaError, ValueError):
    """A parameter violates its box constraints (e.g. sigma <= 0)."""


class DomainError(SpexbmaError, ValueError):
    """An input lies outside the mathematical domain of the operation."""


class InsufficientDataError(SpexbmaError, ValueError):
    """Too few observations for the requested estimator."""


class DegenerateSampleError(SpexbmaError, ValueError):
    """Sample has no dispersion (second L-moment is zero)."""


class DegenerateExtentError(SpexbmaError, ValueError):
    """A coordinate has zero range and cannot be normalized."""


class DegenerateVarianceError(SpexbmaError, ValueError):
    """Reference intensity variance is zero; likelihood undefined."""


class FitFailureError(SpexbmaError, RuntimeError):
    """Parameter estimation failed (out-of-range estimate or bad surface)."""


class NumericFailureError(SpexbmaError, RuntimeError):
    """A likelihood term could not be evaluated; carries the offending
    (year, pair) location when raised from the pairwise likelihood."""

    def __init__(self, message, year=None, pair=None):
        super().__init__(message)
        self.year = year
        self.pair = pair


class SingularInformationError(SpexbmaError, RuntimeError):
    """Numerical Hessian is singular; carries its condition number."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class InitializationError(SpexbmaError, RuntimeError):
    """Objective not finite at any attempted start point."""


class UnstableBootstrapError(SpexbmaError, RuntimeError):
    """Too many bootstrap replicates failed to fit."""


class NoInformationError(SpexbmaError, RuntimeError):
    """All model log-likelihoods are -inf; weights undefined."""


class SimulationError(SpexbmaError, RuntimeError):
    """Random-field simulation failed (e.g. correlation matrix not PD)."""


class SchemaError(SpexbmaError, ValueError):
    """Input file violates the dataset schema."""
