"""Exception types raised by the package."""


class SphvqiError(Exception):
    """Base class for all package errors."""


class ZeroVector(SphvqiError, ValueError):
    pass


class DomainError(SphvqiError, ValueError):
    """Argument outside the domain of a zonal function, e.g. ``|t| > 1``."""


class PoleProximity(SphvqiError, ValueError):
    """Evaluation too close to a coordinate pole for spherical coordinates."""


class DuplicateScale(SphvqiError, ValueError):
    pass


class ParseError(SphvqiError, ValueError):
    pass


class NormError(SphvqiError, ValueError):
    """A point read from file is not on the unit sphere within tolerance."""


class EmptyFile(SphvqiError, ValueError):
    pass


class NotSPD(SphvqiError, ArithmeticError):
    """Cholesky factorisation failed even after diagonal jitter."""


class MissingPointSet(SphvqiError, FileNotFoundError):
    pass


class ConfigError(SphvqiError, ValueError):
    pass


class TangencyWarning(UserWarning):
    """Input vectors have normal components above the tangency tolerance."""
