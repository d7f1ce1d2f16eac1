"""Exception hierarchy shared by the numerical layers and the CLI."""


class OmegaPutError(Exception):
    """Base class for all package errors."""


class DomainError(OmegaPutError, ValueError):
    """Argument outside the domain of a function (poles, invalid parameters)."""


class DegenerateRootsError(OmegaPutError):
    """psi(theta) = q has a repeated real root."""


class PrecisionError(OmegaPutError, ArithmeticError):
    """A computation lost too much precision to be trusted."""


class IntegrationError(OmegaPutError, ArithmeticError):
    """ODE integration failed (overflow or NaN despite rescaling)."""

    def __init__(self, message: str, last_good_x: float | None = None):
        super().__init__(message)
        self.last_good_x = last_good_x


class ConvergenceError(OmegaPutError, ArithmeticError):
    """An iterative limit (ratio plateau, alpha schedule) did not settle."""


class BoundarySearchError(OmegaPutError):
    """The optimal exercise boundary sits on the edge of the search bracket."""


class ConfigError(OmegaPutError, ValueError):
    """Scenario configuration failed validation."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
