"""Exception hierarchy.

Every error carries a ``category`` string (the class name) so the command
line front end can report failures in a machine-readable way.
"""


class EtrcError(Exception):
    """Base class for all toolkit errors."""

    @property
    def category(self):
        return type(self).__name__


class InvalidMatrix(EtrcError, ValueError):
    pass


class NotSymmetric(EtrcError, ValueError):
    pass


class RankDeficient(EtrcError, ValueError):
    pass


class ConvergenceError(EtrcError, RuntimeError):
    pass


class VerificationFailed(EtrcError):
    pass


class NotPositiveDefinite(EtrcError):
    pass


class DegenerateThreshold(EtrcError):
    pass


class NotStabilizable(EtrcError):
    pass


class IndefiniteWeights(EtrcError, ValueError):
    pass


class RobustnessCheckFailed(EtrcError):
    pass


class HypothesisViolated(EtrcError):
    """``beta^2 I - 2 rho^2 L^T L`` is not positive definite.

    The partially completed synthesis is attached so callers can still
    inspect the Riccati solution and gains.
    """

    def __init__(self, message, min_eigenvalue=None, synthesis=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.synthesis = synthesis


class Diverged(EtrcError, RuntimeError):
    pass


class TooFewEvents(EtrcError, ValueError):
    pass


class InvalidConstants(EtrcError, ValueError):
    pass


class ParseError(EtrcError, ValueError):
    pass


class ValidationError(EtrcError, ValueError):
    pass


class UnknownPreset(EtrcError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class IoError(EtrcError, OSError):
    pass
