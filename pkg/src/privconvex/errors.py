"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class RegimeError(ValueError):
    """Parameters violate the regime a strategy or bound is stated for.

    The message names the violated inequality.
    """


class InfeasibleError(ValueError):
    """No admissible solution exists for the requested parameters."""


class BudgetExceeded(RuntimeError):
    """A strategy kept querying past its configured budget."""


class NumericalError(ArithmeticError):
    """A floating-point computation failed to converge or to fit in double precision.

    ``diagnostics`` carries whatever state helps reproduce the failure.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
