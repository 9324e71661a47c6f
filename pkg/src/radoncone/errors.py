"""Exception types raised across the package."""


class ConeError(Exception):
    """Base class for all package errors."""


class PositionOccupied(ConeError, ValueError):
    """An atom already sits at the requested position."""


class NonpositiveWeight(ConeError, ValueError):
    """Atom weights must be strictly positive and finite."""


class NoAtomAt(ConeError, KeyError):
    """No atom at the requested position."""


class NotSubmeasure(ConeError, ValueError):
    pass


class NotPinpointing(ConeError, ValueError):
    """Two marked points share a position but carry different weights."""


class DuplicatePoint(ConeError, ValueError):
    pass


class OverlappingSupports(ConeError, ValueError):
    pass


class TooManyAtoms(ConeError, ValueError):
    """Power-set enumeration requested beyond the configured atom cap."""


class BoundViolated(ConeError, AssertionError):
    """A growth certificate attached to a cone function does not hold."""


class QuadratureFailure(ConeError, ArithmeticError):
    pass


class SeriesNotTruncated(ConeError, ArithmeticError):
    pass


class ConfigError(ConeError, ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class SuiteError(ConeError, RuntimeError):
    """A suite stopped with an exception; ``suite`` names it."""

    def __init__(self, suite: str, exc: BaseException):
        super().__init__(f"suite {suite}: {type(exc).__name__}: {exc}")
        self.suite = suite
