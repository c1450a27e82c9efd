"""Exception types shared across the package."""


class NhgeoError(Exception):
    """Base class for all errors raised by nhgeo."""


class ExprSyntaxError(NhgeoError, ValueError):
    """Malformed expression source."""

    def __init__(self, message, source, position):
        self.source = source
        self.position = position
        super().__init__(f"{message} at position {position} in {source!r}")


class ExprEvalError(NhgeoError, ArithmeticError):
    """Division by zero or a domain error while evaluating an expression."""

    def __init__(self, message, position=None):
        self.position = position
        where = "" if position is None else f" (node at position {position})"
        super().__init__(message + where)


class SingularFrameError(NhgeoError, ArithmeticError):
    """The frame matrix [X | Z] is (numerically) singular at a point."""

    def __init__(self, point, rcond):
        self.point = point
        self.rcond = rcond
        super().__init__(
            f"singular frame matrix at point {[float(v) for v in point]}: "
            f"reciprocal condition estimate {rcond:.3e}"
        )


class IntegrationError(NhgeoError, RuntimeError):
    """ODE integration failed; carries the last successfully reached time."""

    def __init__(self, message, last_good_t):
        self.last_good_t = last_good_t
        super().__init__(f"{message} (last good t = {last_good_t!r})")


class ModelError(NhgeoError, ValueError):
    """Invalid model specification or geometry."""


class ConfigError(NhgeoError, ValueError):
    """Run configuration does not match the schema."""


class LeviNotSurjectiveError(NhgeoError, ArithmeticError):
    """The Levi form is not surjective onto TM/D at a point."""


class SingularSplittingError(NhgeoError, ArithmeticError):
    """The linear map fixing the canonical splitting is not injective."""

    def __init__(self, message, kernel_dim, kernel_basis):
        self.kernel_dim = kernel_dim
        self.kernel_basis = kernel_basis
        super().__init__(message)
