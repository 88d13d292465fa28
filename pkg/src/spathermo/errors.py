"""Exception hierarchy shared by all modules."""


class SpaThermoError(Exception):
    """Base class for every error raised by the package."""

    code = "error"


class DomainError(SpaThermoError, ValueError):
    """An argument lies outside the domain (or range) of a deformation map."""

    code = "domain"

    def __init__(self, message, value=None, domain=None):
        super().__init__(message)
        self.value = value
        self.domain = domain


class InfeasibleEnergyError(SpaThermoError, ValueError):
    """The requested internal energy is outside the open interval (min e, max e)."""

    code = "infeasible_U"


class SolverFailure(SpaThermoError, RuntimeError):
    """Bracketing or root refinement did not converge."""

    code = "solver_failure"


class ConsistencyError(SpaThermoError, RuntimeError):
    """Two routes that must agree disagree beyond tolerance."""

    code = "consistency"


class DegenerateStateError(SpaThermoError, ValueError):
    """A quantity involving 1/beta was requested at beta = 0."""

    code = "degenerate"


class HCViolation(SpaThermoError, ArithmeticError):
    """h'(R) - h''(R) C vanishes, so the heat-capacity transform is singular."""

    code = "hc_violation"

    def __init__(self, message, margin):
        super().__init__(message)
        self.margin = margin
