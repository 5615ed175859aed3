"""Exception types shared across the package."""


class SemimixError(Exception):
    """Base class for every library-specific failure."""


class NonSquareError(SemimixError):
    """Matrix input is not square."""


class NegativeEntryError(SemimixError):
    """Matrix or vector contains a negative entry."""


class RowSumError(SemimixError):
    """A row (or vector) does not sum to one within tolerance."""


class DimensionMismatchError(SemimixError):
    """Operands have incompatible dimensions."""


class ReducibleChainError(SemimixError):
    """The chain has more than one communicating class."""


class PeriodicChainError(SemimixError):
    """The chain is periodic where aperiodicity is required."""


class NotDiagonalizableError(SemimixError):
    """Eigenvector matrix too ill-conditioned to trust the decomposition."""


class NotConvergedError(SemimixError):
    """An iterative search hit its cap before meeting its criterion."""


class SingularSystemError(SemimixError):
    """A linear system that should be regular failed to solve."""


class PathExplosionError(SemimixError):
    """A simulated path exceeded the configured event cap."""


class HypothesisViolatedError(SemimixError):
    """Inputs do not satisfy the hypothesis of the requested bound."""


class InconsistentInputError(SemimixError):
    """Precomputed inputs do not match the requested computation."""


class UnsupportedWaitingModelError(SemimixError):
    """The requested route needs a waiting model it does not support."""


class NotReachedError(SemimixError):
    """A search grid was exhausted before the criterion held."""


class RegionNotSupportedError(SemimixError):
    """Function argument falls outside the implemented evaluation regions."""


class EvaluationOverflowError(SemimixError):
    """Intermediate quantities overflowed double precision."""


class ParameterDomainError(SemimixError, ValueError):
    """Parameter outside the mathematical domain of the operation."""
