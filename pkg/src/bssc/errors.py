"""Exception hierarchy. Every error raised by the package derives from BsscError."""


class BsscError(Exception):
    pass


class ValidationError(BsscError, ValueError):
    """Input outside its documented domain."""


class KernelStructureError(BsscError, ValueError):
    """A kernel does not have the two-parameter state-symmetric form."""


class SingularChannelError(BsscError, ArithmeticError):
    """``alpha + beta == 1``: output is independent of the input."""


class MarkovSingularityError(BsscError, ArithmeticError):
    """``gamma == 1/2`` in the no-feedback Markov input."""


class MarkovInfeasibleError(BsscError, ValueError):
    """The no-feedback Markov matrix has an entry outside [0, 1]."""

    def __init__(self, msg, entry=None, value=None):
        super().__init__(msg)
        self.entry = entry
        self.value = value


class DegeneratePolicyError(BsscError, ValueError):
    """Induced output chain has no unique stationary distribution."""


class ConstraintInfeasibleError(BsscError, ValueError):
    """No grid point satisfies the cost constraint."""


class BudgetError(BsscError, RuntimeError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"search needs {required} evaluations, budget is {budget}")
        self.required = required
        self.budget = budget


class InsufficientDataError(BsscError, ValueError):
    pass
