"""Exception hierarchy shared by the numeric modules and the CLI."""


class MLRelaxError(Exception):
    """Base class for every error raised by mlrelax."""


class InvalidParameterError(MLRelaxError, ValueError):
    """A precondition on an input parameter does not hold."""


class DomainError(InvalidParameterError):
    """Argument lies outside the domain of the formula being evaluated."""


class NonUniformGridError(InvalidParameterError):
    """Discrete operator received samples on a non-uniform grid."""


class PoleError(MLRelaxError, ArithmeticError):
    """Gamma function evaluated at a non-positive integer."""


class GammaOverflowError(MLRelaxError, OverflowError):
    """Gamma function value exceeds the double precision range."""


class NoConvergenceError(MLRelaxError, ArithmeticError):
    """Power series failed to meet its stopping rule."""


class DivergenceError(MLRelaxError, ArithmeticError):
    """Asymptotic series used outside its regime of validity."""


class QuadratureError(MLRelaxError, ArithmeticError):
    """Adaptive quadrature could not reach the requested accuracy."""


class InstabilityError(MLRelaxError, ArithmeticError):
    """Time-stepping produced a negative or increasing trajectory."""
