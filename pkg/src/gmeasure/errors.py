"""Exception hierarchy shared by all modules."""


class GMeasureError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(GMeasureError, ValueError):
    """Invalid parameters or malformed inputs (bad sigma, non-stochastic rows, ...)."""


class SupportError(GMeasureError, ValueError):
    """A distribution puts mass where a reference distribution has none."""


class DegenerateTruthError(GMeasureError, ValueError):
    """Logical probability is zero: the truth function vanishes on the prior's support."""


class ZeroLabelError(GMeasureError, ValueError):
    """A label has zero marginal probability under the channel."""


class FitError(GMeasureError, RuntimeError):
    """Parametric truth-function fit did not find a finite optimum."""


class InfeasibleError(GMeasureError, ValueError):
    """No channel reaches the requested semantic information."""


class RangeError(GMeasureError, ValueError):
    """A scenario's mean left the support grid."""


class NumericalError(GMeasureError, ArithmeticError):
    """Numerical degeneracy (vanishing normaliser, broken identity)."""
