"""Exception hierarchy shared by the solver, refinery, estimator and CLI."""


class DarpError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(DarpError, ValueError):
    """Arguments violate a documented precondition."""


class NonConvergence(DarpError, RuntimeError):
    """An iterative routine hit its iteration cap without meeting tolerance."""


class DegenerateRow(DarpError):
    """A row lost all of its support, so no positive row scale exists."""


class DegenerateColumn(DarpError):
    """A column has positive target mass but no positive entries to carry it."""


class Infeasible(DarpError):
    """The support pattern admits no transport plan with finite objective."""


class InvalidSupport(DarpError, ValueError):
    """A candidate puts mass where the reference matrix is zero."""


class MissingClass(DarpError, ValueError):
    """Some class never appears among the true labels."""


class SingularConfusion(DarpError, ArithmeticError):
    """The confusion matrix is numerically singular."""
