"""Exception hierarchy.

Domain errors (the model has no economically meaningful answer at the given
inputs) are kept apart from numerical failures so callers can tell a violated
constraint from a solver that gave up.
"""


class ModelError(Exception):
    """Base class for everything raised by the package."""


class InfeasibleError(ModelError):
    """A constraint of the model is violated (negative hours, negative CES bracket, ...)."""


class NonPositiveOutput(InfeasibleError):
    pass


class TaxExceedsUnity(InfeasibleError):
    pass


class NoInteriorOptimum(InfeasibleError):
    pass


class BranchVanished(InfeasibleError):
    """The requested root of the fertility quadratic has no feasible value at this state."""


class NoSteadyState(InfeasibleError):
    pass


class NumericalError(ModelError):
    pass


class NonConvergence(NumericalError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class SingularImplicitFunction(NumericalError):
    pass
