"""Exception hierarchy shared by all greenlab modules."""


class GreenlabError(Exception):
    """Base class for all errors raised by greenlab."""


class InvalidInputError(GreenlabError):
    """Arguments violate a documented precondition (dimension mismatch, bad range, ...)."""


class SingularityError(GreenlabError):
    """A singular kernel was evaluated on (or too close to) the diagonal."""

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class NumericalFailureError(GreenlabError):
    """A quadrature or iterative solver failed to reach its accuracy target."""


class StallError(GreenlabError):
    """Line search failed repeatedly; carries the best result found so far."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class VerificationFailureError(GreenlabError):
    """A declared pass constant was exceeded in a verification run."""
