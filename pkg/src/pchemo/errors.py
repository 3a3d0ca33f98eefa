"""Exception hierarchy.

Validation problems derive from :class:`ValidationError`; numerical
failures derive from :class:`NumericalFailure`.  The CLI maps the two
families to exit codes 1 and 2.
"""


class PChemoError(Exception):
    pass


class ValidationError(PChemoError, ValueError):
    pass


class NumericalFailure(PChemoError, RuntimeError):
    pass


class NonAdmissible(ValidationError):
    """A model parameter is outside its admissible range."""


class ZeroData(ValidationError):
    """Initial data has zero mean and cannot be rescaled to mass M."""


class NotSolvable(ValidationError):
    """Right-hand side violates the Neumann compatibility condition."""


class NegativeDensity(NumericalFailure):
    pass


class BlowupSuspected(NumericalFailure):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class QuadratureFail(NumericalFailure):
    pass


class EventNotFound(NumericalFailure):
    pass


class BracketFail(NumericalFailure):
    pass


class ConsistencyError(ValidationError):
    """A stored output fails a recomputed conservation or residual check."""
