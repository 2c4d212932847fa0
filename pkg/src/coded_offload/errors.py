"""Exception hierarchy. The CLI maps each family to an exit code."""


class ValidationError(ValueError):
    """Configuration or sizing problem (CLI exit code 2)."""


class SizingError(ValidationError):
    """A divisibility requirement on N or m is violated.

    ``hint`` carries the minimal compliant values when they can be computed.
    """

    def __init__(self, message, hint=None):
        super().__init__(message)
        self.hint = dict(hint or {})


class FieldTooSmall(ValidationError):
    pass


class RangeError(ValidationError, IndexError):
    pass


class InfeasibleError(ValueError):
    """No scheme exists for the requested parameters (CLI exit code 3)."""


class NoFeasibleRate(InfeasibleError):
    pass


class EmptyRegion(InfeasibleError):
    pass


class InfeasibleBaseline(InfeasibleError):
    pass


class Unrecoverable(RuntimeError):
    """Survivors do not hold enough independent coded rows (CLI exit code 4)."""
