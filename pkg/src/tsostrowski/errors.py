"""Exception hierarchy.

Every error carries a ``kind`` string; the CLI reports it verbatim in its
structured error output.
"""


class TimeScaleError(ValueError):
    kind = "Error"


class EmptyScale(TimeScaleError):
    kind = "EmptyScale"


class MalformedSpec(TimeScaleError):
    kind = "MalformedSpec"


class NotInScale(TimeScaleError):
    kind = "NotInScale"


class NotInKappa(TimeScaleError):
    kind = "NotInKappa"


class ExprSyntaxError(TimeScaleError):
    kind = "SyntaxError"

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class UnknownFunction(TimeScaleError):
    kind = "UnknownFunction"


class DomainError(TimeScaleError):
    kind = "DomainError"


class NotDifferentiable(TimeScaleError):
    kind = "NotDifferentiable"


class QuadratureFailure(TimeScaleError):
    kind = "QuadratureFailure"


class DepthExceeded(TimeScaleError):
    kind = "DepthExceeded"


class OutOfRange(TimeScaleError):
    kind = "OutOfRange"


class MembershipViolation(TimeScaleError):
    kind = "MembershipViolation"


class OrderViolation(TimeScaleError):
    kind = "OrderViolation"


class WrongScaleKind(TimeScaleError):
    kind = "WrongScaleKind"


class Degenerate(TimeScaleError):
    kind = "Degenerate"
