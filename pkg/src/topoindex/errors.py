"""Exception and warning classes shared across the package."""


class TopoIndexError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TopoIndexError, ValueError):
    """Inconsistent model, geometry, flux or run configuration."""


class PreconditionError(TopoIndexError, ValueError):
    """An operation was called on input violating its documented precondition."""


class ParityError(PreconditionError):
    """Invariant requested in the wrong space dimension parity."""


class MarginError(PreconditionError):
    """Trace region or truncation ball too close to the sample edge."""


class FitError(TopoIndexError, ValueError):
    """Not enough usable data for a decay fit."""


class AmbiguousRankWarning(UserWarning):
    """Fermi level coincides with an eigenvalue."""


class IllConditionedWarning(UserWarning):
    """Switch-function transition interval overlaps bulk spectrum."""


class SingularResolventWarning(UserWarning):
    """H - z was numerically singular and z was shifted off the real axis."""
