"""Exception hierarchy.

Validation problems (bad regions, bad configs, mismatched shapes) derive from
``ValidationError``; failures of the numerics themselves derive from
``NumericalError``. The CLI maps these to exit codes 2 and 3.
"""


class AnchorexError(Exception):
    pass


class ValidationError(AnchorexError, ValueError):
    pass


class NumericalError(AnchorexError, ArithmeticError):
    pass


class SingularGram(NumericalError):
    """The Omega Gram matrix could not be factorized, even with jitter."""


class NotOrthogonalOnOmega(NumericalError):
    """Raised by the classical condition number for a non-orthogonal basis."""


class NonConvergence(NumericalError):
    pass


class EmptyIntersectionSuspected(NumericalError):
    """Dykstra iterates keep violating a ball constraint."""
