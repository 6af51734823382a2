"""Exception hierarchy shared by every module."""


class GhzRepError(Exception):
    """Base class for all package errors."""


class BudgetExceeded(GhzRepError):
    """An exhaustive computation would exceed its enumeration budget."""

    def __init__(self, required, budget, what="elements"):
        self.required = required
        self.budget = budget
        super().__init__(f"{what}: need {required}, budget is {budget}")


class NoZeroSubset(GhzRepError):
    pass


class NotSubspaceOf(GhzRepError):
    pass


class ZeroMassEvent(GhzRepError):
    pass


class PartialFunction(GhzRepError):
    pass


class UniverseMismatch(GhzRepError):
    pass


class DomainError(GhzRepError):
    pass


class PreconditionFailed(GhzRepError):
    pass


class ShapeMismatch(GhzRepError):
    pass


class UnsupportedDistribution(GhzRepError):
    pass


class EmptyIntersection(GhzRepError):
    pass


class NotEmbeddable(GhzRepError):
    pass


class VerificationFailed(GhzRepError):
    def __init__(self, message, outcome=None):
        self.outcome = outcome
        super().__init__(message if outcome is None else f"{message}: {outcome!r}")


class ExactSearchInfeasible(GhzRepError):
    pass


class RankDeficient(GhzRepError):
    pass


class NonProductEvent(GhzRepError):
    pass


class HypothesisNotMet(GhzRepError):
    pass
