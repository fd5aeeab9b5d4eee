"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(ValueError):
    """Array dimensions are inconsistent with the operation's contract."""


class ConditioningError(ValueError):
    """A matrix is too close to rank deficiency to proceed safely."""


class InfeasibilityError(RuntimeError):
    """A constraint set is provably empty or a subproblem has no solution.

    ``stage`` names the pipeline stage that detected the problem; ``detail``
    carries the computed bound or iterate that proves it.
    """

    def __init__(self, message, stage=None, detail=None):
        super().__init__(message)
        self.stage = stage
        self.detail = detail
