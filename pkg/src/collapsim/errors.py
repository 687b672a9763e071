"""Exception hierarchy shared by all collapsim modules."""


class CollapsimError(Exception):
    pass


class DomainError(CollapsimError, ValueError):
    """An input lies outside the domain of a formula (e.g. a non-positive length)."""


class StructuralError(CollapsimError, ValueError):
    """Malformed composite input: mismatched lengths, empty lists, bad files."""


class PreconditionError(CollapsimError, ValueError):
    """Input is well formed but violates an operation's stated precondition."""


class InvalidStateError(CollapsimError, ValueError):
    """A Gaussian state that is not normalizable (Re alpha <= 0)."""


class SingularEvaluationError(CollapsimError, ArithmeticError):
    """A closed-form evaluation hit a pole; carries the offending parameters."""

    def __init__(self, message, **context):
        self.context = context
        if context:
            detail = ", ".join(f"{k}={v!r}" for k, v in sorted(context.items()))
            message = f"{message} ({detail})"
        super().__init__(message)


class IntegrationFailure(CollapsimError, ArithmeticError):
    def __init__(self, message, last_t):
        self.last_t = last_t
        super().__init__(f"{message} (last good t={last_t!r})")
