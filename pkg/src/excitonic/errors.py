"""Exception hierarchy shared by every module."""


class ExcitonError(Exception):
    """Base class for all library errors."""


class ValidationError(ExcitonError, ValueError):
    """A value violates a documented invariant or precondition."""


class InvalidSpaceError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    pass


class TruncationError(ExcitonError):
    """The truncated Fock space cannot hold the requested state to tolerance."""

    def __init__(self, message, captured=None):
        super().__init__(message)
        self.captured = captured


class AccuracyError(ExcitonError):
    pass


class PoleError(ExcitonError, ZeroDivisionError):
    """Evaluation exactly on a lossless resonance."""


class ForbiddenZoneError(ExcitonError):
    """A partial refractive index squared is nonpositive."""


class G2UndefinedError(ExcitonError, ZeroDivisionError):
    """g2 is 0/0 (no photons and no coherent amplitude)."""


class QuadratureError(ExcitonError):
    pass
