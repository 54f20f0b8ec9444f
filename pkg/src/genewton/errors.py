"""Exception hierarchy shared by the solver modules."""


class GEError(Exception):
    """Base class for all errors raised by genewton."""


class DomainError(GEError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class HypothesisViolation(GEError):
    """A mathematical precondition (e.g. ``||B - I|| < 1``) does not hold."""


class NotPositiveError(HypothesisViolation):
    """A matrix whose symmetric part must be positive definite is not."""


class EigenError(GEError):
    """The symmetric eigensolver failed to converge."""


class CertificateInfeasible(GEError):
    """The majorant data admit no certificate.

    ``margin`` is the amount by which the feasibility condition is violated
    (``2bK - 1`` for the Lipschitz majorant, ``alpha - (3 - 2*sqrt(2))`` for
    the Smale majorant, ``f(t_bar)`` for custom ones).
    """

    def __init__(self, message, margin=float("nan")):
        super().__init__(message)
        self.margin = margin


class NonConvergence(GEError):
    """An iterative method exhausted its iteration budget."""

    def __init__(self, message, best=None, rho=None):
        super().__init__(message)
        self.best = best
        self.rho = rho


class DegeneracyError(GEError):
    """Active-set enumeration found zero or several consistent patterns."""

    def __init__(self, message, patterns=()):
        super().__init__(message)
        self.patterns = list(patterns)


class ProblemFormatError(GEError, ValueError):
    """A problem file is malformed; ``field`` names the offending entry."""

    def __init__(self, message, field=""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
