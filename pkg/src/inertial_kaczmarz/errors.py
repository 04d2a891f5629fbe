"""Exception types raised across the package."""


class KaczmarzError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(KaczmarzError, ValueError):
    pass


class DegenerateHyperplaneError(KaczmarzError, ValueError):
    pass


class ZeroRowError(KaczmarzError, ValueError):
    pass


class CoherenceUndefinedError(KaczmarzError, ValueError):
    """Raised when a pair-based quantity is requested for a single-row matrix."""


class InconsistentSystemError(KaczmarzError, ValueError):
    pass


class ParallelRowsError(KaczmarzError, ValueError):
    """Raised when a rate bound would divide by 1 - delta**2 = 0."""


class ConditionInapplicableError(KaczmarzError, ValueError):
    pass


class StandardizationError(KaczmarzError, ValueError):
    """Raised when an algorithm that needs unit-norm rows receives other input."""


class MalformedFileError(KaczmarzError, ValueError):
    pass


class ChecksumMismatchError(KaczmarzError, ValueError):
    pass
